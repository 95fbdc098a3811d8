#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ssfit/observations.hpp"
#include "ssfit/params.hpp"

namespace ssfit {

// Raw species-table row. Weights in grams; blank optional columns fall back
// to trait-based defaults at model build time.
struct SpeciesRow {
  std::string name;
  double w_egg = 0.0, w_mat = 0.0, w_inf = 0.0;
  double max_intake_coeff = 0.0;
  double intake_exponent = 0.0;
  std::optional<double> search_volume_coeff;      // default: feeding-level match
  double search_exponent = 0.0;                   // 0 = default allometry
  double ppmr_location = 0.0, ppmr_width = 0.0;   // 0 = defaults
  std::optional<double> background_mortality;     // default: allometric
  double recruitment_efficiency = 0.0;            // 0 = default
  std::optional<double> sel_w50, sel_slope;       // commercial sigmoid selectivity
  std::optional<double> survey_q, survey_w50, survey_slope;
  std::optional<double> sigma2_c_fixed;  // frozen commercial variance
  bool w_masked = false;                 // discard-only: no commercial likelihood
};

std::vector<SpeciesRow> load_species_table(const std::string& path);
void write_species_table(const std::string& path, const std::vector<SpeciesRow>& rows);

// Survey effort file: header `year,effort`, one row per surveyed year.
std::vector<double> load_survey_effort(const std::string& path, int n_years);
void write_survey_effort(const std::string& path, const std::vector<double>& effort_by_year);

// Observations file: header `year,species,channel,value` with channel in
// {commercial, survey}; masks are inferred from missing rows. Rejects unknown
// species, non-positive values, duplicates, and survey rows before the first
// survey year, naming the offending line.
ObservationSet load_observations(const std::string& path, const std::vector<std::string>& species,
                                 int n_years, int first_survey_year);
void write_observations(const std::string& path, const ObservationSet& obs,
                        const std::vector<std::string>& species);

// Catchability-at-size override: header `species,w,q`; values are
// interpolated in ln-weight onto the model grid.
using CatchabilityTable = std::map<std::string, std::vector<std::pair<double, double>>>;
CatchabilityTable load_catchability(const std::string& path);

// Parameter rows: the sample-file layout (ln_kappa, ln_rmax_<sp>, phi0_<sp>,
// phi_<year>_<sp>, sigma2_c_<sp>, sigma2_s_<sp>, log_post).
std::vector<std::string> parameter_header(const std::vector<std::string>& species, int n_years);
std::string format_parameter_row(const ParameterVector& pv, double log_post);
ParameterVector parse_parameter_row(const std::string& line, int n_species, int n_years,
                                    const std::vector<char>& fixed_c, double* log_post);

// Whole-file helpers for truth/start points: header plus one row.
void write_parameter_file(const std::string& path, const ParameterVector& pv,
                          const std::vector<std::string>& species, double log_post);
ParameterVector load_parameter_file(const std::string& path, int n_species, int n_years,
                                    const std::vector<char>& fixed_c);

}  // namespace ssfit
