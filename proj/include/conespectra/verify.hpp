#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "conespectra/contraction.hpp"
#include "conespectra/greens.hpp"
#include "conespectra/substitution.hpp"

namespace conespectra {

/// Outcome of one randomized inequality suite. worst_margin is the smallest
/// slack (bound minus value) seen; a counterexample is a sample whose slack
/// fell below the suite's tolerance.
struct SuiteResult {
    std::string name;
    long long samples = 0;
    long long counterexamples = 0;
    double worst_margin = 0.0;
    double extra = 0.0;  // suite-specific scalar (max kappa, observed margin, ...)
};

// Scalar suites (no model needed).
SuiteResult suite_linear_perturbation(long long n, std::uint64_t seed);
SuiteResult suite_jensen(long long n, std::uint64_t seed);
SuiteResult suite_power_split(long long n, std::uint64_t seed);
SuiteResult suite_mobius_contraction(long long n, std::uint64_t seed);
SuiteResult suite_mobius_inversion(long long n, std::uint64_t seed);
SuiteResult suite_euclid_gamma_bound(long long n, std::uint64_t seed);

// Sphere-state suites; states are drawn at reference points from the grid.
SuiteResult suite_q_identity(const SubstitutionModel& model,
                             const std::vector<GreenVector>& grid, long long n,
                             std::uint64_t seed);
SuiteResult suite_lz_chain(const SubstitutionModel& model, const std::vector<GreenVector>& grid,
                           long long n, std::uint64_t seed, double p_exp);
SuiteResult suite_one_step(const SubstitutionModel& model, const std::vector<GreenVector>& grid,
                           long long n, std::uint64_t seed);
SuiteResult suite_two_step(const SubstitutionModel& model, const std::vector<GreenVector>& grid,
                           long long n, std::uint64_t seed, double lambda);
SuiteResult suite_kappa_le_one(const SubstitutionModel& model,
                               const std::vector<GreenVector>& grid, long long n,
                               std::uint64_t seed, double p_exp, double lambda);
SuiteResult suite_kappa_outside_ball(const SubstitutionModel& model,
                                     const std::vector<GreenVector>& grid,
                                     const IntervalConstants& constants, long long n,
                                     std::uint64_t seed, double p_exp);
SuiteResult suite_invisible_gamma(const SubstitutionModel& model,
                                  const std::vector<GreenVector>& grid,
                                  const IntervalConstants& constants, long long n,
                                  std::uint64_t seed, double p_exp);

struct VerifyConfig {
    SubstitutionModel model;
    double e_min = -1.0;
    double e_max = 1.0;
    double p_exp = 1.5;
    double lambda = 0.05;
    long long samples = 100000;
    std::uint64_t seed = 1;
};

struct VerifyReport {
    IntervalConstants constants;
    std::vector<SuiteResult> suites;
    bool all_pass = false;
};

/// Runs every suite at the config's sample count; the state suites draw their
/// reference points from the interval grid.
VerifyReport run_verify_suites(const VerifyConfig& cfg);

}  // namespace conespectra
