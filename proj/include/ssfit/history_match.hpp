#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ssfit/dataset.hpp"

namespace ssfit {

struct HistoryMatchConfig {
  int waves = 2;
  int points_per_wave = 150;
  double threshold = 3.0;
  // Model-discrepancy variance added to the observation variance in the
  // implausibility denominator.
  double discrepancy_var = 0.0;  // <= 0: use the typical prior variance
  // Condition the yearly rates on the observed catches while stepping the
  // trajectory (rate = catch over selectable biomass, clamped to the prior),
  // so waves search the static parameters instead of the full rate matrix.
  bool condition_rates = true;
};

// Year-by-year rate conditioning of `pv` on the observations: returns a copy
// whose phi matrix tracks the observed commercial catches under pv's statics.
ParameterVector condition_rates_on_catches(const ModelBundle& bundle, const ObservationSet& obs,
                                           const ParameterVector& pv);

struct HistoryMatchPoint {
  ParameterVector pv;
  double implausibility = 0.0;
};

struct HistoryMatchResult {
  std::vector<HistoryMatchPoint> survivors;  // sorted, most plausible first
  std::vector<std::string> warnings;
  double threshold_used = 0.0;
  int points_evaluated = 0;
};

// Wave-based space reduction: sample from the prior, keep points whose worst
// standardized |log obs - log sim| stays under the threshold, refocus later
// waves on the survivors' bounding box. A wave with no survivors relaxes the
// threshold (with a warning) rather than returning nothing.
HistoryMatchResult history_match(const ModelBundle& bundle, const ObservationSet& obs,
                                 const HistoryMatchConfig& cfg, std::uint64_t seed, int threads);

// Worst-output implausibility of one point (infinite when the model predicts
// zero where a catch was observed, or when the run fails).
double implausibility(const ModelBundle& bundle, const ObservationSet& obs,
                      const ParameterVector& pv, double sigma2_c_eff, double sigma2_s_eff);

}  // namespace ssfit
