#pragma once

#include <string>
#include <vector>

#include "ssfit/grid.hpp"

namespace ssfit {

// Fixed life-history traits plus fully resolved per-bin selectivities for one
// species. Vectors indexed by fish bin; all weights in grams, rates per year.
struct SpeciesParams {
  std::string name;
  double w_egg = 0.0;
  double w_mat = 0.0;
  double w_inf = 0.0;

  double max_intake_coeff = 0.0;   // h in  h * m^intake_exponent  (g/year)
  double intake_exponent = 0.0;    // n
  double search_volume_coeff = 0.0;  // gamma in  gamma * m^search_exponent (vol/year)
  double search_exponent = 0.0;      // q
  double ppmr_location = 0.0;      // beta, preferred predator:prey mass ratio
  double ppmr_width = 0.0;         // sigma of the lognormal feeding kernel
  double background_mortality_coeff = 0.0;  // 1/year, size-independent
  double recruitment_efficiency = 0.0;      // egg production efficiency

  std::vector<double> catchability;         // q(m) per bin, max = 1 when fished
  std::vector<double> survey_catchability;  // q_s(m) per bin, >= 0
  std::vector<double> survey_effort_by_year;  // effort multiplier, year t at [t-1]

  // Checks ordering of the weights, positivity of the trait parameters, and
  // the max-1 normalisation of q(m) for fished species.
  void validate(const WeightGrid& grid) const;

  bool is_fished() const;
  double survey_effort(int year) const;  // 0 outside the covered years
};

// Background resource spectrum: semichemostat with carrying capacity
// kappa * m^(-lambda) and regeneration rate regen_coeff * m^regen_exponent.
// kappa is the sampled parameter; lambda and the regeneration law are fixed.
struct ResourceParams {
  double kappa = 0.0;
  double lambda = 0.0;
  double regen_coeff = 0.0;
  double regen_exponent = 0.0;

  void validate() const;
};

}  // namespace ssfit
