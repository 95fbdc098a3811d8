#pragma once

#include <cstddef>
#include <vector>

namespace ssfit {

// Log-uniform body-weight grid in grams. Fish bins cover [w_min_fish, w_max];
// the resource spectrum extends the same spacing `resource_extension` bins
// below the smallest fish egg weight. Bin k spans [edges[k], edges[k+1]) with
// centre at the geometric midpoint.
class WeightGrid {
public:
  WeightGrid(double w_min_fish, double w_max, int n_fish_bins, int resource_extension);

  int n_fish_bins() const { return n_fish_bins_; }
  int n_resource_bins() const { return n_fish_bins_ + resource_extension_; }
  int resource_extension() const { return resource_extension_; }

  // Fish-bin accessors (index 0 = smallest fish bin).
  double center(int k) const { return centers_[resource_extension_ + k]; }
  double width(int k) const { return widths_[resource_extension_ + k]; }

  // Resource/extended-grid accessors (index 0 = smallest resource bin;
  // fish bin k sits at extended index resource_extension() + k).
  double center_ext(int k) const { return centers_[k]; }
  double width_ext(int k) const { return widths_[k]; }

  const std::vector<double>& edges() const { return edges_; }
  double log_step() const { return log_step_; }

  // Smallest fish bin whose centre weight is >= w (clamped to the fish range).
  int fish_bin_at(double w) const;

  // Checks strict monotonicity, positivity, and log-uniform spacing (1e-12
  // relative tolerance on the edge ratio). Throws ValidationError on failure.
  void validate() const;

private:
  int n_fish_bins_;
  int resource_extension_;
  double log_step_;
  std::vector<double> edges_;    // size n_resource_bins()+1, extended grid
  std::vector<double> centers_;  // size n_resource_bins()
  std::vector<double> widths_;
};

}  // namespace ssfit
