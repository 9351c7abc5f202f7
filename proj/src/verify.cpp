#include "conespectra/verify.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "conespectra/hyperbolic.hpp"
#include "conespectra/parallel.hpp"
#include "conespectra/rng.hpp"

namespace conespectra {

namespace {

constexpr double kPi = 3.14159265358979323846;

cdouble random_upper(Rng& rng, double r_min = 1e-3, double r_max = 1e3) {
    const double r = r_min * std::pow(r_max / r_min, rng.u01());
    const double phi = rng.uniform(0.0, kPi);  // upper half plane sector
    return r * cdouble(std::cos(phi), std::sin(phi));
}

// Runs body(i, rng) over n indexed samples and reduces the margins; body
// returns the signed slack of its inequality.
template <class Body>
SuiteResult run_margin_suite(const std::string& name, long long n, std::uint64_t seed, Body body,
                             double tolerance) {
    std::vector<double> margins(static_cast<std::size_t>(n));
    const Rng base(seed);
    parallel_for(static_cast<std::size_t>(n), [&](std::size_t i) {
        Rng rng = base.fork(i);
        margins[i] = body(rng);
    });
    SuiteResult res;
    res.name = name;
    res.samples = n;
    res.worst_margin = std::numeric_limits<double>::infinity();
    for (double m : margins) {
        res.worst_margin = std::min(res.worst_margin, m);
        if (m < -tolerance) ++res.counterexamples;
    }
    return res;
}

const GreenVector& pick_ref(const std::vector<GreenVector>& grid, Rng& rng) {
    return grid[static_cast<std::size_t>(rng.next_u64() % grid.size())];
}

}  // namespace

SuiteResult suite_linear_perturbation(long long n, std::uint64_t seed) {
    return run_margin_suite(
        "linear_perturbation", n, seed,
        [](Rng& rng) {
            const double lam = rng.u01();
            const double a = rng.uniform(-1.0, 1.0);
            const double b = rng.uniform(-1.0, 1.0);
            const cdouble h = random_upper(rng);
            const cdouble g = random_upper(rng);
            const double c0 = c0_bound(lam, a, b, h);
            const cdouble moved = (1.0 + lam * a) * g + lam * b;
            return (1.0 + c0) * gamma_metric(g, h) + c0 - gamma_metric(moved, h);
        },
        1e-9);
}

SuiteResult suite_jensen(long long n, std::uint64_t seed) {
    return run_margin_suite(
        "jensen_refined", n, seed,
        [](Rng& rng) {
            const double p = rng.uniform(1.0, 4.0);
            const double lam = rng.u01();
            const double r = rng.uniform(1e-6, 100.0);
            const double s = r * rng.u01();
            const double delta = jensen_delta(p, lam, s / r);
            const double lhs = std::pow(lam * r + (1.0 - lam) * s, p);
            const double rhs = (1.0 - delta) * (lam * std::pow(r, p) + (1.0 - lam) * std::pow(s, p));
            return (rhs - lhs) / std::max(1.0, rhs);
        },
        1e-9);
}

SuiteResult suite_power_split(long long n, std::uint64_t seed) {
    return run_margin_suite(
        "power_split", n, seed,
        [](Rng& rng) {
            const double p = rng.uniform(1.0, 4.0);
            const double r = rng.uniform(0.0, 50.0);
            const double s = rng.uniform(0.0, 50.0);
            const double rhs = power_split_bound(r, s, p);
            const double lhs = std::pow(r + s, p);
            return (rhs - lhs) / std::max(1.0, rhs);
        },
        1e-9);
}

SuiteResult suite_mobius_contraction(long long n, std::uint64_t seed) {
    return run_margin_suite(
        "mobius_contraction", n, seed,
        [](Rng& rng) {
            const cdouble z = random_upper(rng, 1e-3, 10.0);
            const cdouble xi = random_upper(rng);
            const cdouble zeta = random_upper(rng);
            return gamma_metric(xi, zeta) -
                   gamma_metric(-1.0 / (z + xi), -1.0 / (z + zeta));
        },
        1e-9);
}

SuiteResult suite_mobius_inversion(long long n, std::uint64_t seed) {
    return run_margin_suite(
        "mobius_inversion_exact", n, seed,
        [](Rng& rng) {
            const cdouble g = random_upper(rng);
            const cdouble h = random_upper(rng);
            const double a = gamma_metric(g, h);
            const double b = gamma_metric(-1.0 / g, -1.0 / h);
            const double rel = std::abs(a - b) / std::max(1.0, std::max(a, b));
            return 1e-10 - rel;  // equality up to rounding
        },
        0.0);
}

SuiteResult suite_euclid_gamma_bound(long long n, std::uint64_t seed) {
    return run_margin_suite(
        "euclid_gamma_bound", n, seed,
        [](Rng& rng) {
            const cdouble xi = random_upper(rng);
            const cdouble zeta = random_upper(rng);
            return 4.0 * gamma_metric(xi, zeta) * zeta.imag() + 2.0 * std::abs(zeta) -
                   std::abs(xi);
        },
        1e-9);
}

SuiteResult suite_q_identity(const SubstitutionModel& model, const std::vector<GreenVector>& grid,
                             long long n, std::uint64_t seed) {
    const CherrySphere sphere = cherry_sphere(model, model.root_label);
    return run_margin_suite(
        "q_mean_ratio_identity", n, seed,
        [&](Rng& rng) {
            const GreenVector& ref = pick_ref(grid, rng);
            const SphereState s = random_sphere_state(model, sphere, ref, rng, 0.0);
            // Any two inner slots live in the same half.
            const int x = sphere.outer_count;
            const int y = sphere.size() - 1;
            const double q = ratio_Q(s, x, y);
            const double gx = slot_gamma(s, x), gy = slot_gamma(s, y);
            if (gx == 0.0 || gy == 0.0) return 1.0;
            const double rho = (s.g[static_cast<std::size_t>(x)].imag() * s.ref_slot(y).imag() * gy) /
                               (s.g[static_cast<std::size_t>(y)].imag() * s.ref_slot(x).imag() * gx);
            const double q2 = 2.0 * std::sqrt(rho) / (1.0 + rho);
            return 1e-12 - std::abs(q - q2);
        },
        0.0);
}

SuiteResult suite_lz_chain(const SubstitutionModel& model, const std::vector<GreenVector>& grid,
                           long long n, std::uint64_t seed, double p_exp) {
    const CherrySphere sphere = cherry_sphere(model, model.root_label);
    return run_margin_suite(
        "weighted_chain", n, seed,
        [&](Rng& rng) {
            const GreenVector& ref = pick_ref(grid, rng);
            const SphereState s = random_sphere_state(model, sphere, ref, rng, 0.0);
            const std::vector<double> p = weights_p(ref, sphere);
            const std::vector<double> g = slot_gammas(s);
            const double swc = weighted_contraction_sum(s);
            double pg = 0.0, gmax = 0.0;
            for (std::size_t i = 0; i < g.size(); ++i) {
                pg += p[i] * std::pow(g[i], p_exp);
                gmax = std::max(gmax, g[i]);
            }
            const double first = pg - std::pow(swc, p_exp);
            const double second = std::pow(gmax, p_exp) - pg;
            const double scale = std::max(1.0, std::pow(gmax, p_exp));
            return std::min(first, second) / scale;
        },
        1e-9);
}

SuiteResult suite_one_step(const SubstitutionModel& model, const std::vector<GreenVector>& grid,
                           long long n, std::uint64_t seed) {
    const CherrySphere sphere = cherry_sphere(model, model.root_label);
    return run_margin_suite(
        "one_step_exact", n, seed,
        [&](Rng& rng) {
            const GreenVector& ref = pick_ref(grid, rng);
            std::vector<cdouble> values, refs;
            for (int i = sphere.outer_count; i < sphere.size(); ++i) {
                const cdouble r = ref.values[static_cast<std::size_t>(sphere.slots[static_cast<std::size_t>(i)].label)];
                refs.push_back(r);
                cdouble v;
                do {
                    v = r + random_upper(rng) * cdouble(std::cos(rng.uniform(0.0, 2.0 * kPi)),
                                                        std::sin(rng.uniform(0.0, 2.0 * kPi)));
                } while (!(v.imag() > 0.0));
                values.push_back(v);
            }
            const OneStepReport rep = one_step_check(ref.z, values, refs);
            return rep.rhs - rep.lhs + 1e-9 * (1.0 + std::abs(rep.rhs));
        },
        0.0);
}

SuiteResult suite_two_step(const SubstitutionModel& model, const std::vector<GreenVector>& grid,
                           long long n, std::uint64_t seed, double lambda) {
    const CherrySphere sphere = cherry_sphere(model, model.root_label);
    SuiteResult res = run_margin_suite(
        "two_step_lambda_" + std::to_string(lambda).substr(0, 4), n, seed,
        [&](Rng& rng) {
            const GreenVector& ref = pick_ref(grid, rng);
            const SphereState s = random_sphere_state(model, sphere, ref, rng, lambda);
            const TwoStepReport rep = two_step_check(s, lambda);
            double scale = 1.0;
            for (int i = 0; i < sphere.size(); ++i) scale += slot_gamma(s, i);
            return (rep.rhs - rep.lhs) / scale + 1e-9;
        },
        0.0);
    return res;
}

SuiteResult suite_kappa_le_one(const SubstitutionModel& model,
                               const std::vector<GreenVector>& grid, long long n,
                               std::uint64_t seed, double p_exp, double lambda) {
    const CherrySphere sphere = cherry_sphere(model, model.root_label);
    const auto perms = enumerate_permutations(sphere);
    std::vector<double> kappas(static_cast<std::size_t>(n));
    const Rng base(seed);
    parallel_for(static_cast<std::size_t>(n), [&](std::size_t i) {
        Rng rng = base.fork(i);
        const GreenVector& ref = pick_ref(grid, rng);
        SphereState s = random_sphere_state(model, sphere, ref, rng, 0.0);
        s.w_prime = lambda > 0.0 ? rng.uniform(-lambda, lambda) : 0.0;
        kappas[i] = kappa(s, p_exp, perms);
    });
    SuiteResult res;
    res.name = "kappa_le_one";
    res.samples = n;
    res.worst_margin = std::numeric_limits<double>::infinity();
    for (double k : kappas) {
        res.extra = std::max(res.extra, k);
        res.worst_margin = std::min(res.worst_margin, 1.0 + 1e-12 - k);
        if (k > 1.0 + 1e-12) ++res.counterexamples;
    }
    return res;
}

SuiteResult suite_kappa_outside_ball(const SubstitutionModel& model,
                                     const std::vector<GreenVector>& grid,
                                     const IntervalConstants& constants, long long n,
                                     std::uint64_t seed, double p_exp) {
    const CherrySphere sphere = cherry_sphere(model, model.root_label);
    const auto perms = enumerate_permutations(sphere);
    const double lam = 0.5 * constants.lambda0;
    const double radius = contraction_ball_radius(constants, lam);

    std::vector<double> kappas(static_cast<std::size_t>(n));
    const Rng base(seed);
    parallel_for(static_cast<std::size_t>(n), [&](std::size_t i) {
        Rng rng = base.fork(i);
        const GreenVector& ref = pick_ref(grid, rng);
        SphereState s = random_sphere_state(model, sphere, ref, rng, 0.0);
        s.w_prime = rng.uniform(-lam, lam);
        // Push every slot outside the ball: resample until gamma >= radius.
        for (int slot = 0; slot < sphere.size(); ++slot) {
            const cdouble r = s.ref_slot(slot);
            while (slot_gamma(s, slot) < radius) {
                cdouble v;
                do {
                    const double rad = 1e-1 * std::pow(1e4, rng.u01());
                    const double phi = rng.uniform(0.0, 2.0 * kPi);
                    v = r + rad * cdouble(std::cos(phi), std::sin(phi));
                } while (!(v.imag() > 0.0));
                s.g[static_cast<std::size_t>(slot)] = v;
            }
        }
        kappas[i] = kappa(s, p_exp, perms);
    });
    SuiteResult res;
    res.name = "kappa_outside_ball";
    res.samples = n;
    res.worst_margin = std::numeric_limits<double>::infinity();
    for (double k : kappas) {
        res.extra = std::max(res.extra, k);
        res.worst_margin = std::min(res.worst_margin, 1.0 - k);
        if (!(k < 1.0)) ++res.counterexamples;
    }
    return res;
}

SuiteResult suite_invisible_gamma(const SubstitutionModel& model,
                                  const std::vector<GreenVector>& grid,
                                  const IntervalConstants& constants, long long n,
                                  std::uint64_t seed, double p_exp) {
    const CherrySphere sphere = cherry_sphere(model, model.root_label);
    const auto perms = enumerate_permutations(sphere);
    const double eps = 0.5 * constants.c1;
    const double bound = 1.0 - constants.c2 * std::pow(1.0 - eps / constants.c1, 2.0);

    std::vector<double> margins(static_cast<std::size_t>(n));
    const Rng base(seed);
    parallel_for(static_cast<std::size_t>(n), [&](std::size_t i) {
        Rng rng = base.fork(i);
        const GreenVector& ref = pick_ref(grid, rng);
        SphereState s = random_sphere_state(model, sphere, ref, rng, 0.0);
        // Make slot 0 invisible at level eps: gamma_0 = eps/2 * max over others.
        double gmax = 0.0;
        for (int slot = 1; slot < sphere.size(); ++slot) gmax = std::max(gmax, slot_gamma(s, slot));
        if (gmax == 0.0) {
            margins[i] = 1.0;
            return;
        }
        const double target = 0.5 * eps * gmax;
        const cdouble r0 = s.ref_slot(0);
        const double phi = rng.uniform(0.0, kPi);
        // Solve |d|^2 = target * (Im r0 + |d| sin phi) * Im r0 for |d| >= 0.
        const double b = target * r0.imag() * std::sin(phi);
        const double c = target * r0.imag() * r0.imag();
        const double d = 0.5 * (b + std::sqrt(b * b + 4.0 * c));
        s.g[0] = r0 + d * cdouble(std::cos(phi), std::sin(phi));
        margins[i] = bound + 1e-9 - kappa(s, p_exp, perms);
    });
    SuiteResult res;
    res.name = "invisible_gamma_bound";
    res.samples = n;
    res.worst_margin = std::numeric_limits<double>::infinity();
    res.extra = bound;
    for (double m : margins) {
        res.worst_margin = std::min(res.worst_margin, m);
        if (m < 0.0) ++res.counterexamples;
    }
    return res;
}

VerifyReport run_verify_suites(const VerifyConfig& cfg) {
    VerifyReport rep;
    const ConstantsResult cr =
        interval_constants(cfg.model, cfg.e_min, cfg.e_max, cfg.p_exp);
    rep.constants = cr.constants;

    const long long n = cfg.samples;
    rep.suites.push_back(suite_linear_perturbation(n, cfg.seed + 1));
    rep.suites.push_back(suite_jensen(n, cfg.seed + 2));
    rep.suites.push_back(suite_power_split(n, cfg.seed + 3));
    rep.suites.push_back(suite_mobius_contraction(n, cfg.seed + 4));
    rep.suites.push_back(suite_mobius_inversion(n, cfg.seed + 5));
    rep.suites.push_back(suite_euclid_gamma_bound(n, cfg.seed + 6));
    rep.suites.push_back(suite_q_identity(cfg.model, cr.grid, n, cfg.seed + 7));
    rep.suites.push_back(suite_lz_chain(cfg.model, cr.grid, n, cfg.seed + 8, cfg.p_exp));
    rep.suites.push_back(suite_one_step(cfg.model, cr.grid, n, cfg.seed + 9));
    rep.suites.push_back(suite_two_step(cfg.model, cr.grid, n, cfg.seed + 10, 0.0));
    rep.suites.push_back(suite_two_step(cfg.model, cr.grid, n, cfg.seed + 11, cfg.lambda));
    rep.suites.push_back(suite_kappa_le_one(cfg.model, cr.grid, n, cfg.seed + 12, cfg.p_exp, cfg.lambda));
    rep.suites.push_back(
        suite_kappa_outside_ball(cfg.model, cr.grid, rep.constants, std::min<long long>(n, 10000),
                                 cfg.seed + 13, cfg.p_exp));
    rep.suites.push_back(suite_invisible_gamma(cfg.model, cr.grid, rep.constants,
                                               std::min<long long>(n, 10000), cfg.seed + 14,
                                               cfg.p_exp));

    rep.all_pass = true;
    for (const auto& s : rep.suites)
        if (s.counterexamples > 0) rep.all_pass = false;
    return rep;
}

}  // namespace conespectra
