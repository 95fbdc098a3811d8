#pragma once

#include <string>
#include <vector>

#include "ssfit/model_build.hpp"

namespace ssfit {

// Empirical quantile with linear interpolation between order statistics
// (h = (n-1)p): the convention used by every table this project writes.
double quantile(std::vector<double> values, double p);

// Effective sample size by initial-monotone-sequence truncation of the
// autocovariances. NaN for degenerate (constant) chains.
double effective_sample_size(const std::vector<double>& chain);

// Lag-1 autocorrelation; NaN when fewer than two points or zero variance.
double lag1_autocorrelation(const std::vector<double>& values);

// Posterior sample table (the fit's output file, one column per parameter).
struct SampleMatrix {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;

  int n_rows() const { return static_cast<int>(rows.size()); }
  int column(const std::string& name) const;  // -1 when absent
  std::vector<double> column_values(int c) const;
};

SampleMatrix load_samples(const std::string& path);

ParameterVector params_from_row(const std::vector<double>& row, int n_species, int n_years,
                                const std::vector<char>& fixed_c);

struct SummaryOptions {
  int max_trajectories = 200;  // samples re-run for catch/SSB quantile bands
  int threads = 1;
};

struct SummaryFiles {
  std::string parameter_summary;
  std::string catch_quantiles;
  std::string ssb_quantiles;
  std::string manifest;
};

// Per-parameter median/p10/p90/ESS plus median and 10th/90th percentile bands
// of modelled commercial catch, survey catch, and SSB per species and year,
// recomputed from a spread of posterior samples. Needs >= 2 samples.
SummaryFiles summarize_samples(const ModelBundle& bundle, const SampleMatrix& samples,
                               const std::string& out_dir, const SummaryOptions& options,
                               const std::string& config_hash, std::uint64_t seed);

struct ResidualFiles {
  std::string residuals;
  std::string summary;
  std::string manifest;
};

// Standardized log residuals at the posterior-median parameter point, with
// per-species lag-1 whiteness flags at |rho| > 2/sqrt(n).
ResidualFiles residual_check(const ModelBundle& bundle, const SampleMatrix& samples,
                             const ObservationSet& obs, const std::string& out_dir,
                             const std::string& config_hash, std::uint64_t seed);

}  // namespace ssfit
