#include "ssfit/species.hpp"

#include <algorithm>
#include <cmath>

#include "ssfit/errors.hpp"

namespace ssfit {

bool SpeciesParams::is_fished() const {
  return std::any_of(catchability.begin(), catchability.end(), [](double q) { return q > 0.0; });
}

double SpeciesParams::survey_effort(int year) const {
  if (year < 1 || year > static_cast<int>(survey_effort_by_year.size())) return 0.0;
  return survey_effort_by_year[year - 1];
}

void SpeciesParams::validate(const WeightGrid& grid) const {
  const std::string who = "species '" + name + "'";
  require(w_egg > 0.0 && w_egg < w_mat && w_mat < w_inf, who + ": need 0 < w_egg < w_mat < w_inf");
  require(max_intake_coeff > 0.0 && intake_exponent > 0.0, who + ": intake parameters must be > 0");
  require(search_volume_coeff > 0.0 && search_exponent > 0.0, who + ": search parameters must be > 0");
  require(ppmr_location > 0.0 && ppmr_width > 0.0, who + ": feeding kernel parameters must be > 0");
  require(background_mortality_coeff > 0.0, who + ": background mortality must be > 0");
  require(recruitment_efficiency > 0.0, who + ": recruitment efficiency must be > 0");

  const auto n = static_cast<std::size_t>(grid.n_fish_bins());
  require(catchability.size() == n, who + ": catchability length != n_bins");
  require(survey_catchability.size() == n, who + ": survey catchability length != n_bins");
  for (double q : catchability) require(q >= 0.0 && q <= 1.0, who + ": catchability outside [0,1]");
  for (double q : survey_catchability) require(q >= 0.0, who + ": negative survey catchability");
  for (double e : survey_effort_by_year) require(e >= 0.0, who + ": negative survey effort");

  if (is_fished()) {
    const double qmax = *std::max_element(catchability.begin(), catchability.end());
    require(qmax == 1.0, who + ": catchability not normalised to max 1");
  }
}

void ResourceParams::validate() const {
  require(kappa > 0.0, "resource: kappa must be > 0");
  require(lambda > 1.5 && lambda < 2.5, "resource: lambda outside (1.5, 2.5)");
  require(regen_coeff > 0.0, "resource: regeneration coefficient must be > 0");
}

}  // namespace ssfit
