#include <chrono>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "conespectra/errors.hpp"
#include "conespectra/greens.hpp"
#include "conespectra/model_io.hpp"
#include "conespectra/montecarlo.hpp"
#include "conespectra/verify.hpp"
#include "json.hpp"

namespace {

using conespectra::cdouble;
using ojson = nlohmann::ordered_json;

constexpr const char* kVersion = "conespectra 0.1.0";

double wall_ms_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
}

// Manifest embedded in every machine-readable output. The digest covers the
// payload without the volatile wall-clock field.
ojson manifest_for(const std::string& command, const ojson& config, std::uint64_t seed,
                   const ojson& payload, double wall_ms) {
    ojson m;
    m["command"] = command;
    m["version"] = kVersion;
    m["seed"] = seed;
    m["config"] = config;
    m["payload_digest"] = conespectra::fnv1a_hex(payload.dump());
    m["wall_ms"] = wall_ms;
    return m;
}

void write_text(const std::string& path, const std::string& text) {
    if (path.empty() || path == "-") {
        std::cout << text;
        return;
    }
    std::ofstream out(path, std::ios::binary);
    out << text;
}

std::vector<double> parse_list(const std::string& csv) {
    std::vector<double> out;
    std::stringstream ss(csv);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(std::stod(item));
    return out;
}

conespectra::TrialConfig trial_config_from(const conespectra::ModelFile& mf, double lambda,
                                           double energy, double eta, double p, int depth,
                                           int trials, std::uint64_t seed,
                                           const std::string& boundary) {
    conespectra::TrialConfig cfg;
    cfg.model = mf.model;
    if (mf.has_disorder) {
        cfg.disorder = mf.disorder;
    } else {
        cfg.disorder.mode = conespectra::DisorderMode::IidBoth;
        cfg.disorder.per_label.assign(static_cast<std::size_t>(mf.model.alphabet_size),
                                      conespectra::Law{});
    }
    cfg.lambda = lambda;
    cfg.energy = energy;
    cfg.eta = eta;
    cfg.p_exp = p;
    cfg.depth = depth;
    cfg.n_trials = trials;
    cfg.seed = seed;
    cfg.boundary = (boundary == "dirichlet") ? conespectra::Boundary::Dirichlet
                                             : conespectra::Boundary::Free;
    return cfg;
}

int cmd_validate(const std::string& model_path) {
    const conespectra::ModelFile mf = conespectra::read_model_file(model_path);
    const conespectra::ValidationReport rep = conespectra::validate(mf.model);
    ojson j;
    j["m0"] = rep.m0;
    j["m1"] = rep.m1;
    j["m1star"] = rep.m1star;
    j["m2"] = rep.m2;
    j["ok"] = rep.ok();
    std::cout << j.dump(2) << "\n";
    if (!rep.m0) std::cout << "(M0) violated\n";
    if (!rep.m1star) std::cout << "(M1*) violated\n";
    if (!rep.m2) std::cout << "(M2) violated\n";
    return rep.ok() ? 0 : 1;
}

int cmd_bands(const std::string& model_path, double grid_step, double eta_floor,
              double im_threshold, const std::string& csv_path, const std::string& json_path) {
    const auto t0 = std::chrono::steady_clock::now();
    const conespectra::ModelFile mf = conespectra::read_model_file(model_path);
    const conespectra::BandScan scan =
        conespectra::scan_bands(mf.model, grid_step, eta_floor, im_threshold);

    ojson config;
    config["model"] = model_path;
    config["grid_step"] = grid_step;
    config["eta_floor"] = eta_floor;
    config["im_threshold"] = im_threshold;

    ojson payload;
    payload["intervals"] = ojson::array();
    for (const auto& [a, b] : scan.bands.intervals) payload["intervals"].push_back({a, b});
    payload["eta_floor"] = scan.bands.eta_floor;
    payload["im_threshold"] = scan.bands.im_threshold;

    ojson out = payload;
    out["manifest"] = manifest_for("bands", config, 0, payload, wall_ms_since(t0));
    write_text(json_path, out.dump(2) + "\n");

    if (!csv_path.empty()) {
        std::ostringstream csv;
        csv << "# digest=" << conespectra::fnv1a_hex(payload.dump()) << "\n";
        csv << "E";
        for (int k = 0; k < mf.model.alphabet_size; ++k) csv << ",im_gamma_" << k;
        csv << "\n";
        for (const auto& row : scan.rows) {
            csv << conespectra::format_double(row.energy);
            for (double v : row.im_gamma) csv << "," << conespectra::format_double(v);
            csv << "\n";
        }
        write_text(csv_path, csv.str());
    }
    return 0;
}

int cmd_solve(const std::string& model_path, double energy, double eta, double eta_floor,
              const std::string& out_path) {
    const auto t0 = std::chrono::steady_clock::now();
    const conespectra::ModelFile mf = conespectra::read_model_file(model_path);
    const conespectra::GreenVector g =
        eta_floor > 0.0 ? conespectra::solve_gamma_boundary(mf.model, energy, eta_floor)
                        : conespectra::solve_gamma(mf.model, cdouble(energy, eta));

    ojson config;
    config["model"] = model_path;
    config["energy"] = energy;
    config["eta"] = eta;
    config["eta_floor"] = eta_floor;

    ojson payload;
    payload["z"] = {g.z.real(), g.z.imag()};
    payload["values"] = ojson::array();
    for (const auto& v : g.values) payload["values"].push_back({v.real(), v.imag()});
    payload["residual"] = g.residual;

    ojson out = payload;
    out["manifest"] = manifest_for("solve", config, 0, payload, wall_ms_since(t0));
    write_text(out_path, out.dump(2) + "\n");
    return 0;
}

int cmd_verify(const std::string& model_path, double e_min, double e_max, double p, double lambda,
               long long samples, std::uint64_t seed, const std::string& out_path) {
    const auto t0 = std::chrono::steady_clock::now();
    const conespectra::ModelFile mf = conespectra::read_model_file(model_path);

    conespectra::VerifyConfig vc;
    vc.model = mf.model;
    vc.e_min = e_min;
    vc.e_max = e_max;
    vc.p_exp = p;
    vc.lambda = lambda;
    vc.samples = samples;
    vc.seed = seed;
    const conespectra::VerifyReport rep = conespectra::run_verify_suites(vc);

    ojson config;
    config["model"] = model_path;
    config["e_min"] = e_min;
    config["e_max"] = e_max;
    config["p"] = p;
    config["lambda"] = lambda;
    config["samples"] = samples;
    config["seed"] = seed;

    ojson payload;
    payload["constants"] = {{"eps0", rep.constants.eps0},   {"eps1", rep.constants.eps1},
                            {"delta0", rep.constants.delta0}, {"c1", rep.constants.c1},
                            {"c2", rep.constants.c2},       {"lambda0", rep.constants.lambda0}};
    payload["suites"] = ojson::array();
    for (const auto& s : rep.suites)
        payload["suites"].push_back({{"name", s.name},
                                     {"samples", s.samples},
                                     {"counterexamples", s.counterexamples},
                                     {"worst_margin", s.worst_margin},
                                     {"extra", s.extra}});
    payload["all_pass"] = rep.all_pass;

    ojson out = payload;
    out["manifest"] = manifest_for("verify", config, seed, payload, wall_ms_since(t0));
    write_text(out_path, out.dump(2) + "\n");
    return rep.all_pass ? 0 : 1;
}

ojson vi_point_json(const conespectra::VIPoint& pt) {
    ojson j;
    j["eta"] = pt.eta;
    j["e_gamma"] = pt.e_gamma;
    j["e_gamma_se"] = pt.e_gamma_se;
    j["p_e_gamma"] = pt.p_e_gamma;
    j["slack"] = pt.slack;
    j["u"] = pt.u;
    j["u_dot_e"] = pt.u_dot_e;
    return j;
}

int cmd_simulate(const std::string& model_path, double lambda, double energy, double eta, double p,
                 int depth, int trials, std::uint64_t seed, const std::string& boundary,
                 const std::string& out_path, const std::string& sweep_lambda,
                 const std::string& sweep_eta, const std::string& vi_etas) {
    const auto t0 = std::chrono::steady_clock::now();
    const conespectra::ModelFile mf = conespectra::read_model_file(model_path);

    ojson config;
    config["model"] = model_path;
    config["lambda"] = lambda;
    config["energy"] = energy;
    config["eta"] = eta;
    config["p"] = p;
    config["depth"] = depth;
    config["trials"] = trials;
    config["seed"] = seed;
    config["boundary"] = boundary;

    if (!sweep_lambda.empty() || !sweep_eta.empty()) {
        // Sweep mode: one CSV row per (lambda, eta) grid point.
        const std::vector<double> lams =
            sweep_lambda.empty() ? std::vector<double>{lambda} : parse_list(sweep_lambda);
        const std::vector<double> etas =
            sweep_eta.empty() ? std::vector<double>{eta} : parse_list(sweep_eta);
        std::ostringstream csv;
        csv << "lambda,eta";
        for (int k = 0; k < mf.model.alphabet_size; ++k)
            csv << ",mean_" << k << ",std_error_" << k;
        csv << ",u_dot_e,euclid_moment\n";
        for (double lam : lams)
            for (double et : etas) {
                const conespectra::TrialConfig cfg = trial_config_from(
                    mf, lam, energy, et, p, depth, trials, seed, boundary);
                const conespectra::GreenVector ref = conespectra::solve_gamma(cfg.model, cfg.z());
                const conespectra::PMatrix pm = conespectra::build_p_matrix(cfg.model, ref);
                const conespectra::VIPoint pt = conespectra::verify_vector_inequality(cfg, pm);
                const conespectra::EuclideanReport er = conespectra::euclidean_moment(cfg);
                csv << conespectra::format_double(lam) << "," << conespectra::format_double(et);
                for (std::size_t k = 0; k < pt.e_gamma.size(); ++k)
                    csv << "," << conespectra::format_double(pt.e_gamma[k]) << ","
                        << conespectra::format_double(pt.e_gamma_se[k]);
                csv << "," << conespectra::format_double(pt.u_dot_e) << ","
                    << conespectra::format_double(er.moment) << "\n";
            }
        const std::string body = csv.str();
        write_text(out_path, "# digest=" + conespectra::fnv1a_hex(body) + "\n" + body);
        return 0;
    }

    const conespectra::TrialConfig cfg =
        trial_config_from(mf, lambda, energy, eta, p, depth, trials, seed, boundary);
    const conespectra::GreenVector ref = conespectra::solve_gamma(cfg.model, cfg.z());
    const conespectra::PMatrix pm = conespectra::build_p_matrix(cfg.model, ref);

    const conespectra::MomentVector mv = conespectra::estimate_moment_vector(cfg);
    const conespectra::EuclideanReport er = conespectra::euclidean_moment(cfg);
    const conespectra::VIPoint pt = conespectra::verify_vector_inequality(cfg, pm);

    ojson payload;
    payload["moment_vector"] = ojson::array();
    for (const auto& e : mv.per_label)
        payload["moment_vector"].push_back(
            {{"mean", e.mean}, {"std_error", e.std_error}, {"n", e.n}});
    payload["euclidean"] = {{"moment", er.moment},
                            {"std_error", er.std_error},
                            {"cs_bound", er.cs_bound},
                            {"cs_holds", er.cs_holds}};
    payload["vector_inequality"] = vi_point_json(pt);

    if (!vi_etas.empty()) {
        const conespectra::VIReport vr = conespectra::vi_eta_sweep(cfg, parse_list(vi_etas));
        ojson sweep;
        sweep["points"] = ojson::array();
        for (const auto& point : vr.points) sweep["points"].push_back(vi_point_json(point));
        sweep["ratio_max_min"] = vr.ratio_max_min;
        sweep["kappa"] = {{"states", vr.kappa.states},
                          {"max_cfree", vr.kappa.max_cfree},
                          {"max_cden", vr.kappa.max_cden}};
        payload["eta_sweep"] = sweep;
    }

    ojson out;
    out["config"] = config;
    for (auto& [key, value] : payload.items()) out[key] = value;
    out["manifest"] = manifest_for("simulate", config, seed, payload, wall_ms_since(t0));
    write_text(out_path, out.dump(2) + "\n");
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Green functions, spectral bands and contraction estimates on trees of finite "
                 "cone type"};
    app.require_subcommand(1);

    std::string model_path, out_path, csv_path;
    double energy = 0.0, eta = 0.01, eta_floor = 0.0, lambda = 0.05, p = 1.5;
    double e_min = -1.0, e_max = 1.0;
    double grid_step = 1e-2, band_eta = 1e-6, im_threshold = 1e-3;
    int depth = 12, trials = 1000;
    long long samples = 100000;
    std::uint64_t seed = 1;
    std::string boundary = "free", sweep_lambda, sweep_eta, vi_etas;

    auto* validate = app.add_subcommand("validate", "check the substitution-matrix conditions");
    validate->add_option("--model", model_path)->required();

    auto* bands = app.add_subcommand("bands", "detect spectral bands");
    bands->add_option("--model", model_path)->required();
    bands->add_option("--grid-step", grid_step);
    bands->add_option("--eta-floor", band_eta);
    bands->add_option("--im-threshold", im_threshold);
    bands->add_option("--csv", csv_path);
    bands->add_option("--out", out_path);

    auto* solve = app.add_subcommand("solve", "solve the Green-function system at one energy");
    solve->add_option("--model", model_path)->required();
    solve->add_option("--energy", energy)->required();
    solve->add_option("--eta", eta);
    solve->add_option("--eta-floor", eta_floor);
    solve->add_option("--out", out_path);

    auto* verify = app.add_subcommand("verify", "run the randomized inequality suites");
    verify->add_option("--model", model_path)->required();
    verify->add_option("--emin", e_min);
    verify->add_option("--emax", e_max);
    verify->add_option("--p", p);
    verify->add_option("--lambda", lambda);
    verify->add_option("--samples", samples);
    verify->add_option("--seed", seed);
    verify->add_option("--out", out_path);

    auto* simulate = app.add_subcommand("simulate", "Monte Carlo moment estimation");
    simulate->add_option("--model", model_path)->required();
    simulate->add_option("--lambda", lambda);
    simulate->add_option("--energy", energy);
    simulate->add_option("--eta", eta);
    simulate->add_option("--p", p);
    simulate->add_option("--depth", depth);
    simulate->add_option("--trials", trials);
    simulate->add_option("--seed", seed);
    simulate->add_option("--boundary", boundary)->check(CLI::IsMember({"free", "dirichlet"}));
    simulate->add_option("--out", out_path);
    simulate->add_option("--sweep-lambda", sweep_lambda);
    simulate->add_option("--sweep-eta", sweep_eta);
    simulate->add_option("--vi-etas", vi_etas);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 2;
    }

    try {
        if (validate->parsed()) return cmd_validate(model_path);
        if (bands->parsed())
            return cmd_bands(model_path, grid_step, band_eta, im_threshold, csv_path, out_path);
        if (solve->parsed()) return cmd_solve(model_path, energy, eta, eta_floor, out_path);
        if (verify->parsed())
            return cmd_verify(model_path, e_min, e_max, p, lambda, samples, seed, out_path);
        if (simulate->parsed())
            return cmd_simulate(model_path, lambda, energy, eta, p, depth, trials, seed, boundary,
                                out_path, sweep_lambda, sweep_eta, vi_etas);
    } catch (const conespectra::ParseError& e) {
        std::cerr << "parse error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}
