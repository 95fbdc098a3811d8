#pragma once

#include <memory>
#include <string>
#include <vector>

#include "ssfit/config.hpp"
#include "ssfit/model.hpp"
#include "ssfit/observations.hpp"
#include "ssfit/params.hpp"
#include "ssfit/tables.hpp"

namespace ssfit {

// A fully assembled process model plus the fit-relevant schema facts that come
// with the data: species names, frozen variances, masked commercial channels,
// the study period, and spin-up policy.
struct ModelBundle {
  std::shared_ptr<const SpectrumModel> model;
  std::vector<std::string> species_names;
  std::vector<char> fixed_sigma2_c;
  std::vector<double> fixed_sigma2_c_value;  // valid where fixed
  std::vector<char> w_masked;
  int n_years = 0;
  int first_survey_year = 1;
  int spinup_years = 300;
  double spinup_tol = 1e-6;
  bool spinup_early_exit = true;
  PriorSpec prior;

  int n_species() const { return static_cast<int>(species_names.size()); }
  int species_index(const std::string& name) const;

  // Variance vector with frozen entries applied and the rest at `typical`
  // prior values; the starting point for fits and history matching.
  VarianceParams default_variances() const;

  ModelState spun_state(const ParameterVector& pv) const;
};

// Assembles grid, species, and dynamics from the config and its referenced
// tables. Relative data paths resolve against base_dir.
ModelBundle build_model_bundle(const Config& cfg, const std::string& base_dir);

// Search-volume coefficient that yields feeding level f0 for a predator on a
// resource spectrum at carrying capacity kappa_ref * w^(-lambda).
double gamma_for_feeding_level(double f0, double max_intake_coeff, double kappa_ref, double beta,
                               double sigma, double lambda);

std::string join_path(const std::string& base, const std::string& rel);

}  // namespace ssfit
