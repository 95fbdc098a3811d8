#include "ssfit/grid.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "ssfit/errors.hpp"

namespace ssfit {

WeightGrid::WeightGrid(double w_min_fish, double w_max, int n_fish_bins, int resource_extension)
    : n_fish_bins_(n_fish_bins), resource_extension_(resource_extension) {
  require(w_min_fish > 0.0 && w_max > w_min_fish, "WeightGrid: need 0 < w_min < w_max");
  require(n_fish_bins >= 2, "WeightGrid: need at least 2 fish bins");
  require(resource_extension >= 0, "WeightGrid: negative resource extension");

  const int n_total = n_fish_bins + resource_extension;
  log_step_ = (std::log(w_max) - std::log(w_min_fish)) / n_fish_bins;
  const double log_lo = std::log(w_min_fish) - resource_extension * log_step_;

  edges_.resize(n_total + 1);
  centers_.resize(n_total);
  widths_.resize(n_total);
  for (int k = 0; k <= n_total; ++k) edges_[k] = std::exp(log_lo + k * log_step_);
  for (int k = 0; k < n_total; ++k) {
    centers_[k] = std::exp(log_lo + (k + 0.5) * log_step_);
    widths_[k] = edges_[k + 1] - edges_[k];
  }
  validate();
}

int WeightGrid::fish_bin_at(double w) const {
  for (int k = 0; k < n_fish_bins_; ++k) {
    if (center(k) >= w) return k;
  }
  return n_fish_bins_ - 1;
}

void WeightGrid::validate() const {
  const double ratio = edges_[1] / edges_[0];
  for (std::size_t k = 0; k + 1 < edges_.size(); ++k) {
    require(edges_[k] > 0.0, "WeightGrid: non-positive edge");
    require(edges_[k + 1] > edges_[k], "WeightGrid: edges not strictly increasing");
    const double r = edges_[k + 1] / edges_[k];
    require(std::abs(r / ratio - 1.0) < 1e-12,
            "WeightGrid: spacing not log-uniform at bin " + std::to_string(k));
  }
}

}  // namespace ssfit
