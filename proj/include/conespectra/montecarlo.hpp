#pragma once

#include <cstdint>
#include <vector>

#include "conespectra/contraction.hpp"
#include "conespectra/disorder.hpp"
#include "conespectra/greens.hpp"
#include "conespectra/substitution.hpp"

namespace conespectra {

enum class Boundary { Free, Dirichlet };

struct TrialConfig {
    SubstitutionModel model;
    DisorderSpec disorder;
    double energy = 0.0;
    double eta = 0.01;
    double lambda = 0.0;  // coupling, must stay below 1
    double p_exp = 1.5;
    int depth = 12;
    Boundary boundary = Boundary::Free;
    int n_trials = 1000;
    std::uint64_t seed = 1;

    cdouble z() const { return {energy, eta}; }
};

struct MomentEntry {
    double mean = 0.0;
    double std_error = 0.0;
    int n = 0;
};

struct MomentVector {
    std::vector<MomentEntry> per_label;
};

/// Depth-truncated Green function of the perturbed operator at the root of
/// the realization's tree. Free boundary seeds the leaves with the
/// unperturbed values; Dirichlet cuts the tree there. Hopping enters the
/// recursion through the squared edge factor (1 + lambda theta)^2.
cdouble truncated_green(const TrialConfig& cfg, const DisorderRealization& realization,
                        const GreenVector& reference);
cdouble truncated_green(const TrialConfig& cfg, const DisorderRealization& realization);

/// Per-vertex values of the same recursion (index = vertex id).
std::vector<cdouble> truncated_green_all(const TrialConfig& cfg,
                                         const DisorderRealization& realization,
                                         const GreenVector& reference);

/// Smallest depth D <= 24 whose Dirichlet pilot values at D and D+2 differ by
/// less than tol * (1 + |Gamma|); 24 when none qualifies.
int recommend_depth(const SubstitutionModel& model, cdouble z, double tol = 1e-3);

/// Dirichlet pilot gap |Gamma^(D) - Gamma^(D+2)| at the root label.
double depth_pilot_gap(const SubstitutionModel& model, cdouble z, int depth);

/// Root values of independent disorder trials for the tree with the given
/// root label; deterministic in (cfg.seed, root_label, trial index).
std::vector<cdouble> run_label_trials(const TrialConfig& cfg, int root_label,
                                      const GreenVector& reference);

/// Monte Carlo estimate of the per-label moments of gamma(perturbed,
/// unperturbed)^p at the root.
MomentVector estimate_moment_vector(const TrialConfig& cfg);

/// Same estimator on a caller-provided tree (the tree's root label selects
/// the component); exposed for estimator-invariance checks.
MomentEntry estimate_moment_for_tree(const TrialConfig& cfg, const LabeledTree& tree,
                                     const GreenVector& reference, std::uint64_t stream);

struct EuclideanReport {
    double moment = 0.0;     // mean of |perturbed - unperturbed|^p at the root
    double std_error = 0.0;
    double cs_bound = 0.0;   // sqrt(mean gamma^p * mean (Im Im)^p)
    bool cs_holds = false;
    double mean_gamma_p = 0.0;
    double mean_im_product_p = 0.0;
};

EuclideanReport euclidean_moment(const TrialConfig& cfg);

struct VIPoint {
    double eta = 0.0;
    std::vector<double> e_gamma;      // per root label
    std::vector<double> e_gamma_se;
    std::vector<double> p_e_gamma;    // P * e_gamma
    std::vector<double> slack;        // P * e_gamma - e_gamma
    std::vector<double> u;            // left fixed vector of P
    double u_dot_e = 0.0;
};

/// Componentwise slack of the vector inequality at cfg.z() with the supplied
/// transition matrix.
VIPoint verify_vector_inequality(const TrialConfig& cfg, const PMatrix& pmatrix);

struct KappaStats {
    int states = 0;
    double max_cfree = 0.0;
    double max_cden = 0.0;
};

struct VIReport {
    std::vector<VIPoint> points;
    double ratio_max_min = 0.0;  // spread of <u, E gamma> across the eta grid
    KappaStats kappa;
};

/// Boundedness probe over an eta grid: re-solves the reference and P at each
/// eta, reports <u, E gamma> per point and its max/min ratio, and samples
/// sphere states from the trials for the averaged-contraction statistics
/// (both denominator variants).
VIReport vi_eta_sweep(const TrialConfig& cfg, const std::vector<double>& etas,
                      int kappa_states = 100);

/// Sphere state assembled from one trial's recursion values at the root of
/// the label-j tree; propagate() on it reproduces the trial's root value.
SphereState extract_sphere_state(const TrialConfig& cfg, const LabeledTree& tree,
                                 const DisorderRealization& realization,
                                 const std::vector<cdouble>& values, const GreenVector& reference);

}  // namespace conespectra
