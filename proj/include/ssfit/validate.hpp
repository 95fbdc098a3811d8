#pragma once

#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

namespace ssfit {

// One validation check: a named pass/fail with a human-readable measurement.
struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

// Delayed-acceptance reduction: with the full likelihood as the only
// surrogate, the outer stage must never reject a composite whose inner move
// was accepted (the correction ratio cancels exactly).
CheckResult check_exact_surrogate_mda(int iterations, std::uint64_t seed);
CheckResult check_exact_surrogate_pda(int iterations, std::uint64_t seed);

// Exact stationarity on discrete targets: enumerated transition matrices of
// every kernel, and of the composed four-step sweep, fix the target to 1e-10.
CheckResult check_enumeration_stationarity();

// Conjugate variance update against closed-form posterior moments, plus
// bitwise preservation of frozen entries.
CheckResult check_gibbs_conjugate(int draws, std::uint64_t seed);

// PDA on the linear-Gaussian state-space toy against the exact smoother:
// per-year means within 3 Monte-Carlo standard errors and marginal KS
// distances against oracle draws below 0.05.
CheckResult check_pda_linear_gaussian(int chain_draws, int oracle_draws, std::uint64_t seed);

// Plain MH on a standard normal: mean within 3 MC standard errors.
CheckResult check_mh_gaussian_moments(int iterations, std::uint64_t seed);

// Calderhead on a standard normal: mean within 3 MC-SE and a higher move rate
// than the K=1 chain at the same scale.
CheckResult check_calderhead_gaussian(int iterations, int n_proposals, std::uint64_t seed);

struct ValidationOptions {
  bool quick = false;
  int threads = 1;
  std::uint64_t seed = 1;
};

struct ValidationReport {
  bool all_passed = true;
  std::vector<CheckResult> checks;
};

// Runs the toy-target suite, printing one pass/fail line per check.
ValidationReport run_kernel_validation(const ValidationOptions& options, std::ostream& out);

// Shared small helpers for the validation and acceptance suites.
double ks_distance_two_sample(std::vector<double> a, std::vector<double> b);
double sample_mean(const std::vector<double>& v);
double sample_sd(const std::vector<double>& v);

}  // namespace ssfit
