#include "conespectra/montecarlo.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>

#include "conespectra/errors.hpp"
#include "conespectra/hyperbolic.hpp"
#include "conespectra/parallel.hpp"
#include "conespectra/rng.hpp"

namespace conespectra {

namespace {

void validate_config(const TrialConfig& cfg) {
    if (!(cfg.lambda >= 0.0 && cfg.lambda < 1.0))
        throw OutOfRange("trial config: lambda must lie in [0, 1)");
    if (cfg.depth < 2) throw OutOfRange("trial config: depth must be at least 2");
    if (!(cfg.eta > 0.0)) throw InvalidZ("trial config: eta must be positive");
    if (cfg.n_trials < 1) throw OutOfRange("trial config: need at least one trial");
    validate_disorder(cfg.disorder, cfg.model);
}

double effective_v_per(const TrialConfig& cfg, const LabeledTree& tree, int id) {
    if (id == tree.root && cfg.disorder.root_v_per_override)
        return *cfg.disorder.root_v_per_override;
    return cfg.model.v_per[static_cast<std::size_t>(tree.label_of(id))];
}

// Sequential compensated reduction; trial results are collected by index
// first, so the sum does not depend on the thread count.
double kahan_sum(const std::vector<double>& xs) {
    double sum = 0.0, comp = 0.0;
    for (double x : xs) {
        const double y = x - comp;
        const double t = sum + y;
        comp = (t - sum) - y;
        sum = t;
    }
    return sum;
}

MomentEntry reduce_moment(const std::vector<double>& xs) {
    MomentEntry e;
    e.n = static_cast<int>(xs.size());
    const double n = static_cast<double>(e.n);
    e.mean = kahan_sum(xs) / n;
    if (e.n > 1) {
        std::vector<double> sq(xs.size());
        for (std::size_t i = 0; i < xs.size(); ++i) sq[i] = (xs[i] - e.mean) * (xs[i] - e.mean);
        e.std_error = std::sqrt(kahan_sum(sq) / (n - 1.0) / n);
    }
    return e;
}

std::uint64_t trial_seed(std::uint64_t seed, int root_label, int trial) {
    Rng r = Rng(seed).fork(static_cast<std::uint64_t>(root_label) + 1);
    Rng t = r.fork(static_cast<std::uint64_t>(trial));
    return t.next_u64();
}

// Label-space Dirichlet iteration: the depth-D truncated value at the root of
// the unperturbed finite tree.
std::vector<cdouble> dirichlet_iterate(const SubstitutionModel& model, cdouble z, int depth) {
    std::vector<cdouble> g(static_cast<std::size_t>(model.alphabet_size));
    for (int k = 0; k < model.alphabet_size; ++k)
        g[static_cast<std::size_t>(k)] = -1.0 / (z - model.v_per[static_cast<std::size_t>(k)]);
    for (int d = 0; d < depth; ++d) {
        std::vector<cdouble> next(g.size());
        for (int k = 0; k < model.alphabet_size; ++k) {
            cdouble sum = z - model.v_per[static_cast<std::size_t>(k)];
            for (int l = 0; l < model.alphabet_size; ++l)
                sum += static_cast<double>(model.m(k, l)) * g[static_cast<std::size_t>(l)];
            next[static_cast<std::size_t>(k)] = -1.0 / sum;
        }
        g.swap(next);
    }
    return g;
}

}  // namespace

std::vector<cdouble> truncated_green_all(const TrialConfig& cfg,
                                         const DisorderRealization& realization,
                                         const GreenVector& reference) {
    const LabeledTree& tree = *realization.tree;
    const cdouble z = cfg.z();
    const double lam = cfg.lambda;
    std::vector<cdouble> values(static_cast<std::size_t>(tree.size()));

    for (int id = tree.size() - 1; id >= 0; --id) {
        const TreeVertex& vert = tree.vertices[static_cast<std::size_t>(id)];
        if (vert.children.empty() && cfg.boundary == Boundary::Free) {
            values[static_cast<std::size_t>(id)] = reference.values[static_cast<std::size_t>(vert.label)];
            continue;
        }
        cdouble sum = z - effective_v_per(cfg, tree, id) - lam * realization.v[static_cast<std::size_t>(id)];
        for (int c : vert.children) {
            const double t = 1.0 + lam * realization.theta[static_cast<std::size_t>(c)];
            sum += t * t * values[static_cast<std::size_t>(c)];
        }
        values[static_cast<std::size_t>(id)] = -1.0 / sum;
        assert(values[static_cast<std::size_t>(id)].imag() > 0.0);
    }
    return values;
}

cdouble truncated_green(const TrialConfig& cfg, const DisorderRealization& realization,
                        const GreenVector& reference) {
    return truncated_green_all(cfg, realization, reference)[static_cast<std::size_t>(realization.tree->root)];
}

cdouble truncated_green(const TrialConfig& cfg, const DisorderRealization& realization) {
    const GreenVector reference = solve_gamma(cfg.model, cfg.z());
    return truncated_green(cfg, realization, reference);
}

double depth_pilot_gap(const SubstitutionModel& model, cdouble z, int depth) {
    const std::vector<cdouble> a = dirichlet_iterate(model, z, depth);
    const std::vector<cdouble> b = dirichlet_iterate(model, z, depth + 2);
    return std::abs(a[static_cast<std::size_t>(model.root_label)] -
                    b[static_cast<std::size_t>(model.root_label)]);
}

int recommend_depth(const SubstitutionModel& model, cdouble z, double tol) {
    const GreenVector reference = solve_gamma(model, z);
    const double scale =
        1.0 + std::abs(reference.values[static_cast<std::size_t>(model.root_label)]);
    for (int d = 2; d <= 24; ++d)
        if (depth_pilot_gap(model, z, d) < tol * scale) return d;
    return 24;
}

std::vector<cdouble> run_label_trials(const TrialConfig& cfg, int root_label,
                                      const GreenVector& reference) {
    const LabeledTree tree = grow_tree(cfg.model, root_label, cfg.depth);
    std::vector<cdouble> roots(static_cast<std::size_t>(cfg.n_trials));
    parallel_for(static_cast<std::size_t>(cfg.n_trials), [&](std::size_t t) {
        const DisorderRealization real =
            sample(cfg.disorder, tree, trial_seed(cfg.seed, root_label, static_cast<int>(t)));
        roots[t] = truncated_green(cfg, real, reference);
    });
    return roots;
}

MomentVector estimate_moment_vector(const TrialConfig& cfg) {
    validate_config(cfg);
    const GreenVector reference = solve_gamma(cfg.model, cfg.z());

    if (cfg.boundary == Boundary::Dirichlet) {
        const double scale =
            1.0 + std::abs(reference.values[static_cast<std::size_t>(cfg.model.root_label)]);
        if (depth_pilot_gap(cfg.model, cfg.z(), cfg.depth) > 1e-3 * scale)
            throw DepthInsufficient("estimate_moment_vector: Dirichlet boundary not converged at depth " +
                                    std::to_string(cfg.depth));
    }

    MomentVector mv;
    for (int j = 0; j < cfg.model.alphabet_size; ++j) {
        const std::vector<cdouble> roots = run_label_trials(cfg, j, reference);
        const cdouble ref = reference.values[static_cast<std::size_t>(j)];
        std::vector<double> gp(roots.size());
        for (std::size_t t = 0; t < roots.size(); ++t)
            gp[t] = std::pow(gamma_metric(roots[t], ref), cfg.p_exp);
        mv.per_label.push_back(reduce_moment(gp));
    }
    return mv;
}

MomentEntry estimate_moment_for_tree(const TrialConfig& cfg, const LabeledTree& tree,
                                     const GreenVector& reference, std::uint64_t stream) {
    const int j = tree.label_of(tree.root);
    const cdouble ref = reference.values[static_cast<std::size_t>(j)];
    std::vector<double> gp(static_cast<std::size_t>(cfg.n_trials));
    parallel_for(static_cast<std::size_t>(cfg.n_trials), [&](std::size_t t) {
        Rng base = Rng(cfg.seed).fork(stream);
        Rng tr = base.fork(static_cast<std::uint64_t>(t));
        const DisorderRealization real = sample(cfg.disorder, tree, tr.next_u64());
        gp[t] = std::pow(gamma_metric(truncated_green(cfg, real, reference), ref), cfg.p_exp);
    });
    return reduce_moment(gp);
}

EuclideanReport euclidean_moment(const TrialConfig& cfg) {
    validate_config(cfg);
    const GreenVector reference = solve_gamma(cfg.model, cfg.z());
    const int j = cfg.model.root_label;
    const cdouble ref = reference.values[static_cast<std::size_t>(j)];
    const std::vector<cdouble> roots = run_label_trials(cfg, j, reference);

    std::vector<double> ep(roots.size()), gp(roots.size()), ip(roots.size());
    for (std::size_t t = 0; t < roots.size(); ++t) {
        ep[t] = std::pow(std::abs(roots[t] - ref), cfg.p_exp);
        gp[t] = std::pow(gamma_metric(roots[t], ref), cfg.p_exp);
        ip[t] = std::pow(roots[t].imag() * ref.imag(), cfg.p_exp);
    }

    EuclideanReport rep;
    const MomentEntry me = reduce_moment(ep);
    rep.moment = me.mean;
    rep.std_error = me.std_error;
    rep.mean_gamma_p = reduce_moment(gp).mean;
    rep.mean_im_product_p = reduce_moment(ip).mean;
    rep.cs_bound = std::sqrt(rep.mean_gamma_p * rep.mean_im_product_p);
    rep.cs_holds = rep.moment <= rep.cs_bound * (1.0 + 1e-9) + 1e-300;
    return rep;
}

VIPoint verify_vector_inequality(const TrialConfig& cfg, const PMatrix& pmatrix) {
    const MomentVector mv = estimate_moment_vector(cfg);
    VIPoint pt;
    pt.eta = cfg.eta;
    for (const auto& e : mv.per_label) {
        pt.e_gamma.push_back(e.mean);
        pt.e_gamma_se.push_back(e.std_error);
    }
    pt.u = pmatrix.left_eigenvector;
    pt.p_e_gamma.assign(pt.e_gamma.size(), 0.0);
    for (int jidx = 0; jidx < pmatrix.n; ++jidx)
        for (int k = 0; k < pmatrix.n; ++k)
            pt.p_e_gamma[static_cast<std::size_t>(jidx)] +=
                pmatrix.at(jidx, k) * pt.e_gamma[static_cast<std::size_t>(k)];
    for (std::size_t i = 0; i < pt.e_gamma.size(); ++i) {
        pt.slack.push_back(pt.p_e_gamma[i] - pt.e_gamma[i]);
        pt.u_dot_e += pt.u[i] * pt.e_gamma[i];
    }
    return pt;
}

SphereState extract_sphere_state(const TrialConfig& cfg, const LabeledTree& tree,
                                 const DisorderRealization& realization,
                                 const std::vector<cdouble>& values, const GreenVector& reference) {
    const int root = tree.root;
    const CherrySphere sphere = cherry_sphere(cfg.model, tree.label_of(root));
    const auto& children = tree.vertices[static_cast<std::size_t>(root)].children;
    if (children.empty()) throw InsufficientDepth("extract_sphere_state: tree too shallow");

    int o_prime = -1;
    std::vector<int> outer_ids;
    for (int c : children) {
        if (o_prime < 0 && tree.label_of(c) == sphere.o_prime_label)
            o_prime = c;
        else
            outer_ids.push_back(c);
    }
    const auto& inner_ids = tree.vertices[static_cast<std::size_t>(o_prime)].children;
    if (inner_ids.empty()) throw InsufficientDepth("extract_sphere_state: tree too shallow");

    const double lam = cfg.lambda;
    // Slot values carry the squared edge factor, exactly as they enter the
    // recursion; the o' edge factor becomes the vartheta of the state.
    auto hatted = [&](int id) {
        const double t = 1.0 + lam * realization.theta[static_cast<std::size_t>(id)];
        return t * t * values[static_cast<std::size_t>(id)];
    };
    std::vector<cdouble> g;
    g.reserve(static_cast<std::size_t>(sphere.size()));
    for (int c : outer_ids) g.push_back(hatted(c));
    for (int c : inner_ids) g.push_back(hatted(c));

    const double t_op = 1.0 + lam * realization.theta[static_cast<std::size_t>(o_prime)];
    const double w = lam * realization.v[static_cast<std::size_t>(root)];
    const double wp = lam * realization.v[static_cast<std::size_t>(o_prime)];
    const double vartheta = t_op * t_op - 1.0;

    return make_sphere_state(cfg.model, sphere, reference, std::move(g), w, wp, vartheta);
}

VIReport vi_eta_sweep(const TrialConfig& cfg, const std::vector<double>& etas, int kappa_states) {
    VIReport rep;
    double lo = 0.0, hi = 0.0;
    for (double eta : etas) {
        TrialConfig point = cfg;
        point.eta = eta;
        const GreenVector reference = solve_gamma(point.model, point.z());
        const PMatrix pm = build_p_matrix(point.model, reference);
        const VIPoint pt = verify_vector_inequality(point, pm);
        if (rep.points.empty() || pt.u_dot_e < lo) lo = pt.u_dot_e;
        if (rep.points.empty() || pt.u_dot_e > hi) hi = pt.u_dot_e;
        rep.points.push_back(pt);
    }
    rep.ratio_max_min = lo > 0.0 ? hi / lo : 0.0;

    // Averaged-contraction statistics on states drawn from the trials at the
    // smallest eta of the grid.
    TrialConfig probe = cfg;
    probe.eta = *std::min_element(etas.begin(), etas.end());
    const GreenVector reference = solve_gamma(probe.model, probe.z());
    const LabeledTree tree = grow_tree(probe.model, probe.model.root_label, probe.depth);
    const CherrySphere sphere = cherry_sphere(probe.model, probe.model.root_label);
    if (count_permutations(sphere) <= 5040) {
        const auto perms = enumerate_permutations(sphere);
        const int n_states = std::min(kappa_states, probe.n_trials);
        for (int t = 0; t < n_states; ++t) {
            const DisorderRealization real =
                sample(probe.disorder, tree, trial_seed(probe.seed, probe.model.root_label, t));
            const std::vector<cdouble> values = truncated_green_all(probe, real, reference);
            const SphereState state = extract_sphere_state(probe, tree, real, values, reference);
            const KappaReport kr = kappa_report(state, probe.p_exp, perms);
            rep.kappa.max_cfree = std::max(rep.kappa.max_cfree, kr.kappa);
            rep.kappa.max_cden = std::max(rep.kappa.max_cden, kr.kappa_cden);
            ++rep.kappa.states;
        }
    }
    return rep;
}

}  // namespace conespectra
