#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "conespectra/substitution.hpp"

namespace conespectra {

enum class DisorderMode {
    IidPotential,        // independent v per vertex, theta = 0
    IidHopping,          // independent theta per vertex, v = 0
    IidBoth,             // independent (v, theta) per vertex
    CorrelatedDecay,     // v_x = (w_x + sum over children v_c) / k, iid w
    EdgeWeightLaplacian  // iid theta, v_x = theta_x + sum over children theta_c
};

enum class LawKind { Uniform, TwoPoint, TruncatedNormal };

/// Bounded law on (-1, 1). Uniform(-width, width); symmetric two-point at
/// +-width; centered normal with the given sigma resampled into (-1, 1).
struct Law {
    LawKind kind = LawKind::Uniform;
    double width = 0.5;  // uniform / two-point
    double sigma = 0.3;  // truncated normal
};

struct DisorderSpec {
    DisorderMode mode = DisorderMode::IidBoth;
    std::vector<Law> per_label;
    // Root-only potential override: the tree root has one neighbor less than
    // other vertices of its label, which matters for the weighted Laplacian.
    std::optional<double> root_v_per_override;
    // Per-vertex law overrides break label equidistribution on purpose; used
    // to build admissibility counterexamples for check_p1_p2.
    std::map<int, Law> vertex_law_overrides;
};

/// One sampled disorder configuration on a finite tree. Pure function of
/// (spec, seed, tree); theta_x lives on the edge between x and its parent.
struct DisorderRealization {
    const LabeledTree* tree = nullptr;
    std::vector<double> v;
    std::vector<double> theta;
};

struct StatReport {
    bool p1_pass = false;
    bool p2_pass = false;
    double ks_stat_v = 0.0;
    double ks_stat_theta = 0.0;
    double ks_critical = 0.0;
    double cross_correlation = 0.0;
    double correlation_threshold = 0.0;
    double ancestor_correlation = 0.0;  // positive for the decay mode
    int pair_a = -1;
    int pair_b = -1;
};

DisorderRealization sample(const DisorderSpec& spec, const LabeledTree& tree, std::uint64_t seed);

/// Empirical admissibility check: same-label vertices with disjoint forward
/// trees must have equal marginals (two-sample Kolmogorov-Smirnov at the 0.01
/// level) and, for the iid modes, vanishing cross correlation.
StatReport check_p1_p2(const DisorderSpec& spec, const SubstitutionModel& model, int n_trials,
                       std::uint64_t seed);

/// Two-sample Kolmogorov-Smirnov statistic (max CDF distance).
double ks_statistic(std::vector<double> a, std::vector<double> b);

/// Compatibility of a spec with a model: matching law count, and for the
/// edge-weight Laplacian mode the required v_per = -(forward degree + 1) with
/// laws narrow enough that the summed theta values stay inside (-1, 1).
void validate_disorder(const DisorderSpec& spec, const SubstitutionModel& model);

}  // namespace conespectra
