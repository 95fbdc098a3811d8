#pragma once

#include <string>
#include <vector>

namespace ssfit {

// Observed catches in tonnes: commercial matrix w over years 1..n_years and
// survey matrix z from first_survey_year on, with availability masks. Present
// entries are strictly positive (the likelihood works on logs); anything
// missing or masked simply contributes no likelihood term.
struct ObservationSet {
  int n_years = 0;
  int n_species = 0;
  int first_survey_year = 1;
  std::vector<double> w;       // year-major
  std::vector<double> z;
  std::vector<char> w_mask;    // true where w is observed
  std::vector<char> z_mask;

  static ObservationSet empty(int years, int species, int first_survey);

  std::size_t idx(int t, int sp) const {
    return static_cast<std::size_t>(t - 1) * n_species + sp;
  }
  bool has_w(int t, int sp) const { return w_mask[idx(t, sp)] != 0; }
  bool has_z(int t, int sp) const { return z_mask[idx(t, sp)] != 0; }
  double w_at(int t, int sp) const { return w[idx(t, sp)]; }
  double z_at(int t, int sp) const { return z[idx(t, sp)]; }

  void set_w(int t, int sp, double value);
  void set_z(int t, int sp, double value);

  int count_w() const;
  int count_z() const;

  // Positivity of present entries, mask/shape consistency, no survey entries
  // before first_survey_year.
  void validate() const;
};

}  // namespace ssfit
