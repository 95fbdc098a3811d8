#pragma once

#include <cstdint>

#include "ssfit/model_build.hpp"

namespace ssfit {

// Forward run at one parameter point: spin-up followed by the study period.
struct SimulationRun {
  SpinUpResult spinup;
  TrajectoryResult trajectory;
};
SimulationRun simulate_point(const ModelBundle& bundle, const ParameterVector& pv);

// Synthetic observations: the trajectory at `truth` plus lognormal noise with
// the truth's variances. Commercial entries for every year and unmasked
// species, survey entries from the first survey year where survey fishing is
// active. A variance of exactly 0 is the noise-free limit (generator only).
ObservationSet generate_synthetic(const ModelBundle& bundle, const ParameterVector& truth,
                                  std::uint64_t seed);

// Truth/start parameter points read from config keys (truth.ln_kappa,
// truth.ln_rmax, truth.phi0, truth.phi_year_<t>, truth.sigma2_c,
// truth.sigma2_s), with frozen variances applied from the bundle.
ParameterVector truth_from_config(const Config& cfg, const ModelBundle& bundle);

}  // namespace ssfit
