#pragma once

#include <vector>

#include "ssfit/model.hpp"

namespace ssfit {

struct UniformPrior {
  double lo = 0.0;
  double hi = 1.0;
  bool contains(double x) const { return x >= lo && x <= hi; }
  double logpdf(double x) const;
};

struct InvGammaPrior {
  double shape = 1.0;  // a
  double scale = 1.0;  // b
  double logpdf(double x) const;
  double mean() const;    // b/(a-1), requires a > 1
  double median() const;  // numeric, via bisection on the cdf
};

// Table of priors for every uncertain quantity: uniform boxes for ln kappa,
// ln rmax, the spin-up rates and the yearly rates, inverse-gamma for the two
// observation variances.
struct PriorSpec {
  UniformPrior ln_kappa{0.0, 40.0};
  UniformPrior ln_rmax{0.0, 50.0};
  UniformPrior phi0{0.0, 1.5};
  UniformPrior phi{0.0, 1.5};
  InvGammaPrior sigma2_s{2.0, 2.0};
  InvGammaPrior sigma2_c{0.1, 0.1};

  // Observation variance used when none has been estimated yet (history
  // matching): prior mean when it exists, otherwise the prior median.
  double typical_sigma2_c() const;
  double typical_sigma2_s() const;
};

// Log-scale observation error variances per species. Entries with fixed_c set
// are constants of the model, never sampled and excluded from the prior.
struct VarianceParams {
  std::vector<double> sigma2_c;
  std::vector<double> sigma2_s;
  std::vector<char> fixed_c;

  void validate() const;
};

// Every uncertain quantity of one posterior point.
struct ParameterVector {
  double ln_kappa = 0.0;
  std::vector<double> ln_rmax;
  std::vector<double> phi0;
  PhiMatrix phi;
  VarianceParams variances;

  int n_species() const { return static_cast<int>(ln_rmax.size()); }

  StaticParams static_params() const;      // exp-transformed kappa and rmax
  FishingRates spinup_rates() const;
};

// Sum of the component log prior densities; -inf outside any support. Frozen
// variance entries contribute nothing.
double log_prior(const ParameterVector& pv, const PriorSpec& prior);

}  // namespace ssfit
