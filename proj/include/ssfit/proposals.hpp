#pragma once

#include <vector>

#include "ssfit/rng.hpp"

namespace ssfit {

using Point = std::vector<double>;

// Random-walk proposal for one parameter block. Implementations must be
// evaluable in both directions; symmetric() == true lets kernels drop the
// Hastings density ratio.
class BlockProposal {
public:
  virtual ~BlockProposal() = default;
  virtual std::vector<double> propose(const std::vector<double>& current,
                                      RandomSource& rng) const = 0;
  virtual double log_density(const std::vector<double>& from,
                             const std::vector<double>& to) const = 0;
  virtual bool symmetric() const = 0;
};

// Gaussian random walk on unbounded support, per-component scales.
class GaussianWalk final : public BlockProposal {
public:
  explicit GaussianWalk(std::vector<double> scales);
  std::vector<double> propose(const std::vector<double>& current,
                              RandomSource& rng) const override;
  double log_density(const std::vector<double>& from, const std::vector<double>& to) const override;
  bool symmetric() const override { return true; }
  const std::vector<double>& scales() const { return scales_; }

private:
  std::vector<double> scales_;
};

// Gaussian step folded back into [lo, hi] by reflection at the bounds, which
// keeps the density symmetric and proposals always inside the prior box.
class ReflectedWalk final : public BlockProposal {
public:
  ReflectedWalk(std::vector<double> scales, std::vector<double> lo, std::vector<double> hi);
  std::vector<double> propose(const std::vector<double>& current,
                              RandomSource& rng) const override;
  double log_density(const std::vector<double>& from, const std::vector<double>& to) const override;
  bool symmetric() const override { return true; }
  const std::vector<double>& scales() const { return scales_; }

  // Fold an unconstrained value into [lo, hi] (period-2(hi-lo) reflection).
  static double reflect(double x, double lo, double hi);

private:
  std::vector<double> scales_, lo_, hi_;
};

// Uniform draw from an explicit per-component support. One uniform consumed
// per component; used by the discrete validation targets, where it makes every
// kernel branch enumerable.
class FiniteUniformProposal final : public BlockProposal {
public:
  explicit FiniteUniformProposal(std::vector<std::vector<double>> support);
  std::vector<double> propose(const std::vector<double>& current,
                              RandomSource& rng) const override;
  double log_density(const std::vector<double>& from, const std::vector<double>& to) const override;
  bool symmetric() const override { return true; }

private:
  std::vector<std::vector<double>> support_;
};

// Gaussian walk with one dominant correlation direction on top of diagonal
// noise: y = x + s * u * direction + eps, u standard normal, eps ~ N(0, D).
// Used where the target is known to carry a strong ridge (for instance a
// carrying-capacity / recruitment-cap trade-off). Unbounded; rely on the
// prior to reject out-of-support candidates.
class CorrelatedWalk final : public BlockProposal {
public:
  CorrelatedWalk(std::vector<double> diag_scales, std::vector<double> direction,
                 double direction_scale);
  std::vector<double> propose(const std::vector<double>& current,
                              RandomSource& rng) const override;
  double log_density(const std::vector<double>& from, const std::vector<double>& to) const override;
  bool symmetric() const override { return true; }

private:
  std::vector<double> diag_, dir_;
  double dir_scale_;
  double log_det_;      // log det(D + s^2 d d^T)
  double rank1_coeff_;  // s^2 / (1 + s^2 d^T D^-1 d)
};

// Point mass at the current block: the degenerate proposal that subset-mode
// updates use for the years they leave alone.
class DegenerateProposal final : public BlockProposal {
public:
  std::vector<double> propose(const std::vector<double>& current,
                              RandomSource& rng) const override;
  double log_density(const std::vector<double>& from, const std::vector<double>& to) const override;
  bool symmetric() const override { return true; }
};

}  // namespace ssfit
