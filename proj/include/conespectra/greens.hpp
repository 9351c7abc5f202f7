#pragma once

#include <complex>
#include <optional>
#include <utility>
#include <vector>

#include "conespectra/hyperbolic.hpp"
#include "conespectra/substitution.hpp"

namespace conespectra {

/// One point of the label-invariant fixed-point system: the truncated Green
/// functions Gamma_k(z) of the unperturbed operator, one per label.
struct GreenVector {
    cdouble z;
    std::vector<cdouble> values;
    double residual = 0.0;
};

struct SolveOptions {
    double tol = 1e-12;
    int max_damped = 200;
    int max_newton = 60;
    int max_damped_fallback = 20000;
    std::optional<std::vector<cdouble>> initial;
};

struct SpectralBands {
    std::vector<std::pair<double, double>> intervals;
    double eta_floor = 0.0;
    double im_threshold = 0.0;
};

struct BandScanRow {
    double energy;
    std::vector<double> im_gamma;  // per label, at energy + i*eta_floor
};

struct BandScan {
    std::vector<BandScanRow> rows;
    SpectralBands bands;
};

/// Row-stochastic label transition matrix built from the unperturbed sphere
/// weights, with its normalized positive left fixed vector.
struct PMatrix {
    int n = 0;
    std::vector<double> entries;  // row-major
    std::vector<double> left_eigenvector;

    double at(int j, int k) const { return entries[static_cast<std::size_t>(j) * n + k]; }
};

/// Residual of the recursion at gamma: max_k |Gamma_k + 1/(z - v_k + sum_l M(k,l) Gamma_l)|.
double recursion_residual(const SubstitutionModel& model, const GreenVector& gamma);

/// Fixed point of Gamma_k = -1/(z - v_k + sum_l M(k,l) Gamma_l) with all
/// imaginary parts positive. Damped fixed-point iteration with a Newton
/// fallback; requires Im z > 0.
GreenVector solve_gamma(const SubstitutionModel& model, cdouble z, const SolveOptions& opts = {});

/// Boundary values via continuation: solve at eta = 1, 1/2, 1/4, ... down to
/// eta_floor, each solve seeded with the previous solution.
GreenVector solve_gamma_boundary(const SubstitutionModel& model, double energy, double eta_floor,
                                 const SolveOptions& opts = {});

/// Scan the crude-norm-bound interval; a grid energy is in band when every
/// label's Im Gamma at energy + i*eta_floor exceeds im_threshold. Contiguous
/// in-band points are merged and the endpoints refined by bisection.
BandScan scan_bands(const SubstitutionModel& model, double grid_step = 1e-2,
                    double eta_floor = 1e-6, double im_threshold = 1e-3);

SpectralBands detect_bands(const SubstitutionModel& model, double grid_step = 1e-2,
                           double eta_floor = 1e-6, double im_threshold = 1e-3);

/// Convex sphere weights of the cherry sphere at the unperturbed solution:
/// Im Gamma_x normalized over the o-sphere for outer slots, and the product
/// of the o-level weight of o' with the o'-sphere weight for inner slots.
/// Sums to one.
std::vector<double> sphere_weights(const CherrySphere& sphere, const GreenVector& gamma);

PMatrix build_p_matrix(const SubstitutionModel& model, const GreenVector& gamma);

cdouble full_green_at_root(const SubstitutionModel& model, const GreenVector& gamma);

/// Truncated Green function at x0 of the tree re-rooted at x0. Off-path
/// subtrees keep their unperturbed label values; the path from x0 to the old
/// root is resolved inward by the recursion.
cdouble reroot_green(const SubstitutionModel& model, const LabeledTree& tree, int x0,
                     const GreenVector& gamma);

}  // namespace conespectra
