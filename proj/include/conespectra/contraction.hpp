#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "conespectra/greens.hpp"
#include "conespectra/rng.hpp"
#include "conespectra/substitution.hpp"

namespace conespectra {

/// One configuration on a cherry sphere: a point of H^slots together with the
/// scalar perturbations and the unperturbed reference at the same z. The
/// o-level quantities see the o'-children only through the aggregated value
/// g_o' = -1/(z - v_o' - w' + sum of inner slots), scaled by (1 + vartheta)
/// exactly as it enters the map to g_o.
struct SphereState {
    CherrySphere sphere;
    cdouble z;
    std::vector<cdouble> g;  // per slot, outer first
    double w = 0.0;
    double w_prime = 0.0;
    double vartheta = 0.0;
    GreenVector reference;  // per-label unperturbed values at z
    double v_o = 0.0;
    double v_o_prime = 0.0;

    cdouble ref_slot(int i) const {
        return reference.values[static_cast<std::size_t>(sphere.slots[static_cast<std::size_t>(i)].label)];
    }
    cdouble ref_o() const { return reference.values[static_cast<std::size_t>(sphere.o_label)]; }
    cdouble ref_o_prime() const {
        return reference.values[static_cast<std::size_t>(sphere.o_prime_label)];
    }
};

SphereState make_sphere_state(const SubstitutionModel& model, const CherrySphere& sphere,
                              const GreenVector& reference, std::vector<cdouble> g, double w = 0.0,
                              double w_prime = 0.0, double vartheta = 0.0);

/// (g_o', g_o): the aggregated inner value and the full two-level image.
std::pair<cdouble, cdouble> propagate(const SphereState& s);

/// Normalized imaginary-part weights of one expansion level. The outer half
/// returns outer_count + 1 entries, the last one belonging to the aggregated
/// o' value; the inner half returns one entry per inner slot.
std::vector<double> weights_q(const SphereState& s, SphereHalf half);

/// Geometric-to-arithmetic mean ratio of two slots of the same half; zero by
/// convention when either slot sits exactly at its reference.
double ratio_Q(const SphereState& s, int x, int y);

/// Cosine of the relative argument of the two slot deviations; zero by
/// convention on degenerate slots.
double cos_alpha(const SphereState& s, int x, int y);

/// Slot-wise contraction quantities in [-1, 1]. Outer slots use the o-level
/// sum with the aggregate participating; inner slots carry the product of the
/// positive part of the aggregate's o-level factor with their inner-level
/// sum. The positive part keeps the two-level substitution one-sided, which
/// the plain product is not.
std::vector<double> contraction_c(const SphereState& s);

/// Unperturbed convex weights of the sphere slots (sum to one).
std::vector<double> weights_p(const GreenVector& reference, const CherrySphere& sphere);

double slot_gamma(const SphereState& s, int i);
std::vector<double> slot_gammas(const SphereState& s);

/// p-weighted contraction sum  sum_x p_x c_x gamma_x, clipped at zero.
double weighted_contraction_sum(const SphereState& s);

struct KappaReport {
    double kappa = 0.0;       // permutation average with the c-free denominator
    double kappa_cden = 0.0;  // variant with c inside the denominator, for inspection
    double numerator = 0.0;
    double denominator = 0.0;
    double denominator_c = 0.0;
};

KappaReport kappa_report(const SphereState& s, double p_exp,
                         const std::vector<LabelPermutation>& permutations);

/// Averaged contraction coefficient; always <= 1, and 0 by convention when
/// every slot sits at its reference.
double kappa(const SphereState& s, double p_exp,
             const std::vector<LabelPermutation>& permutations);

struct TwoStepReport {
    double lhs = 0.0;
    double rhs = 0.0;
    double outer_sum = 0.0;   // sum over outer slots of p c gamma
    double inner_sum = 0.0;   // sum over inner slots of p c gamma
    double c_outer = 0.0;     // multiplicative constant on the outer part
    double c_inner = 0.0;     // multiplicative constant on the inner part
    double c_additive = 0.0;  // additive constant
    bool holds = false;
};

/// Two-level expansion bound at perturbation scale lam (all of |w|, |w'|,
/// |vartheta| must be below lam). The three scalar perturbations are absorbed
/// into per-level constants that vanish as lam -> 0; at lam = 0 the bound is
/// the exact expansion.
TwoStepReport two_step_check(const SphereState& s, double lam);

struct OneStepReport {
    double lhs = 0.0;
    double rhs = 0.0;
    bool holds = false;
};

/// Single-level expansion: gamma(-1/(z + sum xi), -1/(z + sum zeta)) against
/// the weighted contraction sum of the member deviations. Exact up to the
/// Im z >= 0 shift.
OneStepReport one_step_check(cdouble z, const std::vector<cdouble>& values,
                             const std::vector<cdouble>& refs);

struct VisibilityReport {
    std::vector<int> vis_gamma;     // slot indices visible w.r.t. gamma
    std::vector<int> vis_im_outer;  // o-level member indices (aggregate last)
    std::vector<int> vis_im_inner;  // inner slot offsets
};

VisibilityReport visibility(const SphereState& s, double eps);

struct IntervalConstants {
    double eps0 = 0.0;
    double eps1 = 0.0;
    double delta0 = 0.0;
    double c1 = 0.0;
    double c2 = 0.0;
    double lambda0 = 0.0;  // eps1 * delta0 / (1 + delta0)
};

struct ConstantsOptions {
    int energy_points = 200;
    int eta_levels = 21;  // eta = 2^0 ... 2^-(eta_levels-1)
    double band_grid_step = 1e-2;
    double band_eta_floor = 1e-6;
    double band_im_threshold = 1e-3;
};

struct ConstantsResult {
    IntervalConstants constants;
    std::vector<GreenVector> grid;  // solved references over the (E, eta) grid
};

/// Grid minima/maxima of the interval constants over [e_min, e_max] + i(0, 1].
/// Requires the interval to sit strictly inside a detected band (margin two
/// grid steps).
ConstantsResult interval_constants(const SubstitutionModel& model, double e_min, double e_max,
                                   double p_exp, const ConstantsOptions& opts = {});

/// Ball radius outside of which the uniform contraction applies at coupling
/// lam < lambda0.
double contraction_ball_radius(const IntervalConstants& c, double lam);

/// Random state: slot values reference + r e^{i phi} with log-uniform r in
/// [r_min, r_max], phi uniform, resampled into the upper half plane;
/// perturbations uniform in (-lam, lam).
SphereState random_sphere_state(const SubstitutionModel& model, const CherrySphere& sphere,
                                const GreenVector& reference, Rng& rng, double lam,
                                double r_min = 1e-3, double r_max = 1e3);

}  // namespace conespectra
