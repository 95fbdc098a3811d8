#pragma once

#include <cstdint>
#include <string>

#include "ssfit/sweep.hpp"

namespace ssfit {

struct FitOptions {
  std::uint64_t seed = 1;
  int threads = 1;
  std::string output_dir;
  bool resume = false;
  int halt_after = 0;  // > 0: checkpoint and stop after that many iterations
};

struct FitResult {
  std::string samples_path;
  std::string runlog_path;
  std::string checkpoint_path;
  std::string manifest_path;
  int iterations_done = 0;
  int iterations_requested = 0;
  ChainState final_state;
};

// The full calibration pipeline: history matching for a starting point (or a
// supplied start), pilot tuning of the proposal scales, then the four-step
// sweep for the configured number of iterations. Post-burn-in samples are
// appended to samples.csv; one machine-readable record per sweep goes to
// runlog.jsonl; checkpoints allow byte-exact resume.
FitResult run_fit(const Config& cfg, const std::string& base_dir, const FitOptions& options);

}  // namespace ssfit
