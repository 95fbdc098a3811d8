#include "ssfit/observations.hpp"

#include <algorithm>
#include <cmath>

#include "ssfit/errors.hpp"

namespace ssfit {

ObservationSet ObservationSet::empty(int years, int species, int first_survey) {
  require(years >= 0 && species >= 1, "ObservationSet: bad dimensions");
  require(first_survey >= 1, "ObservationSet: first survey year must be >= 1");
  ObservationSet obs;
  obs.n_years = years;
  obs.n_species = species;
  obs.first_survey_year = first_survey;
  const std::size_t n = static_cast<std::size_t>(years) * species;
  obs.w.assign(n, 0.0);
  obs.z.assign(n, 0.0);
  obs.w_mask.assign(n, 0);
  obs.z_mask.assign(n, 0);
  return obs;
}

void ObservationSet::set_w(int t, int sp, double value) {
  require(value > 0.0, "observation: commercial catch must be > 0 (mask zero-catch records)");
  w[idx(t, sp)] = value;
  w_mask[idx(t, sp)] = 1;
}

void ObservationSet::set_z(int t, int sp, double value) {
  require(value > 0.0, "observation: survey catch must be > 0 (mask zero-catch records)");
  require(t >= first_survey_year, "observation: survey entry before the first survey year");
  z[idx(t, sp)] = value;
  z_mask[idx(t, sp)] = 1;
}

int ObservationSet::count_w() const {
  return static_cast<int>(std::count(w_mask.begin(), w_mask.end(), 1));
}

int ObservationSet::count_z() const {
  return static_cast<int>(std::count(z_mask.begin(), z_mask.end(), 1));
}

void ObservationSet::validate() const {
  const std::size_t n = static_cast<std::size_t>(n_years) * n_species;
  require(w.size() == n && z.size() == n && w_mask.size() == n && z_mask.size() == n,
          "observations: matrix/mask shape mismatch");
  for (int t = 1; t <= n_years; ++t) {
    for (int sp = 0; sp < n_species; ++sp) {
      if (has_w(t, sp))
        require(std::isfinite(w_at(t, sp)) && w_at(t, sp) > 0.0,
                "observations: non-positive commercial entry");
      if (has_z(t, sp)) {
        require(std::isfinite(z_at(t, sp)) && z_at(t, sp) > 0.0,
                "observations: non-positive survey entry");
        require(t >= first_survey_year, "observations: survey entry before first survey year");
      }
    }
  }
}

}  // namespace ssfit
