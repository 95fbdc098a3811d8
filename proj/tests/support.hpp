#pragma once

// Shared fixtures: a small programmatic two/three-species model used by the
// process-model and likelihood tests, independent of the shipped data files.

#include <cmath>
#include <vector>

#include "ssfit/model.hpp"
#include "ssfit/model_build.hpp"

namespace testsupport {

inline ssfit::SpeciesParams make_species(const ssfit::WeightGrid& grid, const char* name,
                                         double w_inf, double kappa_ref, double lambda,
                                         double survey_q, int n_years, int first_survey) {
  ssfit::SpeciesParams sp;
  sp.name = name;
  sp.w_egg = 1e-3;
  sp.w_mat = 0.25 * w_inf;
  sp.w_inf = w_inf;
  sp.max_intake_coeff = 30.0;
  sp.intake_exponent = 2.0 / 3.0;
  sp.ppmr_location = 100.0;
  sp.ppmr_width = 1.3;
  sp.search_exponent = sp.intake_exponent + lambda - 2.0;
  sp.search_volume_coeff = ssfit::gamma_for_feeding_level(0.6, sp.max_intake_coeff, kappa_ref,
                                                          sp.ppmr_location, sp.ppmr_width, lambda);
  sp.background_mortality_coeff = 0.6 * std::pow(w_inf, sp.intake_exponent - 1.0);
  sp.recruitment_efficiency = 1.0;
  sp.catchability.resize(grid.n_fish_bins());
  sp.survey_catchability.resize(grid.n_fish_bins());
  for (int b = 0; b < grid.n_fish_bins(); ++b) {
    const double lw = std::log(grid.center(b));
    sp.catchability[b] = 1.0 / (1.0 + std::exp(-5.0 * (lw - std::log(sp.w_mat))));
    sp.survey_catchability[b] =
        survey_q / (1.0 + std::exp(-2.0 * (lw - std::log(sp.w_mat / 10.0))));
  }
  double mx = 0.0;
  for (double q : sp.catchability) mx = std::max(mx, q);
  for (double& q : sp.catchability) q /= mx;
  sp.survey_effort_by_year.assign(n_years, 0.0);
  for (int t = first_survey; t <= n_years; ++t) sp.survey_effort_by_year[t - 1] = 1.0;
  return sp;
}

struct ToyModel {
  ssfit::WeightGrid grid{1e-3, 2e4, 60, 31};
  double lambda = 2.05;
  double ln_kappa = 21.0;
  std::vector<ssfit::SpeciesParams> species;
  ssfit::ResourceParams resource{1.0, 2.05, 10.0, -1.0 / 3.0};
  ssfit::DynamicsConfig dyn;

  explicit ToyModel(int n_species = 3, int n_years = 10, int first_survey = 3, int bins = 60) {
    grid = ssfit::WeightGrid(1e-3, 2e4, bins, bins / 2);
    const double kappa = std::exp(ln_kappa);
    const double winfs[3] = {300.0, 2000.0, 20000.0};
    const char* names[3] = {"small", "medium", "large"};
    for (int i = 0; i < n_species; ++i)
      species.push_back(
          make_species(grid, names[i], winfs[i], kappa, lambda, 0.05, n_years, first_survey));
  }

  ssfit::SpectrumModel build() const { return {grid, species, resource, dyn}; }

  ssfit::StaticParams statics() const {
    ssfit::StaticParams sp;
    sp.kappa = std::exp(ln_kappa);
    const double rm[3] = {24.0, 23.0, 22.0};
    for (std::size_t i = 0; i < species.size(); ++i) sp.rmax.push_back(std::exp(rm[i]));
    return sp;
  }
};

}  // namespace testsupport
