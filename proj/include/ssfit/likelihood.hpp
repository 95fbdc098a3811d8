#pragma once

#include <vector>

#include "ssfit/model.hpp"
#include "ssfit/observations.hpp"
#include "ssfit/params.hpp"

namespace ssfit {

// Set when a required model catch is non-positive under a positive
// observation: the point is infeasible and the log likelihood is -inf. This is
// a rejection signal for the samplers, not an error.
struct LikelihoodDiag {
  bool infeasible = false;
  int year = 0;
  int species = 0;
};

// Full log likelihood: normal log-densities of ln w on ln c with sigma2_c over
// all years, plus ln z on ln s with sigma2_s from the first survey year on.
// Masked entries contribute zero.
double log_likelihood_full(const std::vector<CatchRecord>& catches, const ObservationSet& obs,
                           const VarianceParams& var, LikelihoodDiag* diag = nullptr);

// The species-i factor over all years (both channels).
double log_likelihood_species(int species, const std::vector<CatchRecord>& catches,
                              const ObservationSet& obs, const VarianceParams& var,
                              LikelihoodDiag* diag = nullptr);

// The year-t factor over all species. The survey factor enters only for
// t >= first_survey_year, even if survey data were present earlier.
double log_likelihood_year(int year, const CatchRecord& catches_t, const ObservationSet& obs,
                           const VarianceParams& var, LikelihoodDiag* diag = nullptr);

// Sum of squared log residuals and observation counts per species, split by
// channel; inputs to the conjugate variance update.
struct ResidualSums {
  std::vector<double> ss_c, ss_s;
  std::vector<int> n_c, n_s;
};
ResidualSums residual_sums(const std::vector<CatchRecord>& catches, const ObservationSet& obs);

}  // namespace ssfit
