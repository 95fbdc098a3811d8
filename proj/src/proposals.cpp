#include "ssfit/proposals.hpp"

#include <cmath>
#include <limits>
#include <numbers>

#include "ssfit/errors.hpp"

namespace ssfit {

namespace {

inline double normal_logpdf(double x, double mean, double sd) {
  const double z = (x - mean) / sd;
  return -0.5 * z * z - std::log(sd) - 0.5 * std::log(2.0 * std::numbers::pi);
}

}  // namespace

GaussianWalk::GaussianWalk(std::vector<double> scales) : scales_(std::move(scales)) {
  for (double s : scales_) require(s > 0.0, "GaussianWalk: scales must be > 0");
}

std::vector<double> GaussianWalk::propose(const std::vector<double>& current,
                                          RandomSource& rng) const {
  require(current.size() == scales_.size(), "GaussianWalk: block size mismatch");
  std::vector<double> out(current.size());
  for (std::size_t j = 0; j < current.size(); ++j) out[j] = current[j] + scales_[j] * rng.normal();
  return out;
}

double GaussianWalk::log_density(const std::vector<double>& from,
                                 const std::vector<double>& to) const {
  double total = 0.0;
  for (std::size_t j = 0; j < from.size(); ++j) total += normal_logpdf(to[j], from[j], scales_[j]);
  return total;
}

ReflectedWalk::ReflectedWalk(std::vector<double> scales, std::vector<double> lo,
                             std::vector<double> hi)
    : scales_(std::move(scales)), lo_(std::move(lo)), hi_(std::move(hi)) {
  require(scales_.size() == lo_.size() && lo_.size() == hi_.size(),
          "ReflectedWalk: length mismatch");
  for (std::size_t j = 0; j < scales_.size(); ++j) {
    require(scales_[j] > 0.0, "ReflectedWalk: scales must be > 0");
    require(hi_[j] > lo_[j], "ReflectedWalk: empty support");
  }
}

double ReflectedWalk::reflect(double x, double lo, double hi) {
  const double span = hi - lo;
  double u = std::fmod(x - lo, 2.0 * span);
  if (u < 0.0) u += 2.0 * span;
  return u <= span ? lo + u : hi - (u - span);
}

std::vector<double> ReflectedWalk::propose(const std::vector<double>& current,
                                           RandomSource& rng) const {
  require(current.size() == scales_.size(), "ReflectedWalk: block size mismatch");
  std::vector<double> out(current.size());
  for (std::size_t j = 0; j < current.size(); ++j)
    out[j] = reflect(current[j] + scales_[j] * rng.normal(), lo_[j], hi_[j]);
  return out;
}

double ReflectedWalk::log_density(const std::vector<double>& from,
                                  const std::vector<double>& to) const {
  // Method of images, truncated; adjacent mirror copies dominate for the
  // step sizes used here.
  double total = 0.0;
  for (std::size_t j = 0; j < from.size(); ++j) {
    const double span = hi_[j] - lo_[j];
    double dens = 0.0;
    for (int k = -4; k <= 4; ++k) {
      const double shift = 2.0 * k * span;
      dens += std::exp(normal_logpdf(to[j] + shift, from[j], scales_[j]));
      dens += std::exp(normal_logpdf(2.0 * lo_[j] - to[j] + shift, from[j], scales_[j]));
    }
    total += std::log(dens);
  }
  return total;
}

FiniteUniformProposal::FiniteUniformProposal(std::vector<std::vector<double>> support)
    : support_(std::move(support)) {
  for (const auto& s : support_) require(!s.empty(), "FiniteUniformProposal: empty support");
}

std::vector<double> FiniteUniformProposal::propose(const std::vector<double>& current,
                                                   RandomSource& rng) const {
  require(current.size() == support_.size(), "FiniteUniformProposal: block size mismatch");
  std::vector<double> out(current.size());
  for (std::size_t j = 0; j < current.size(); ++j)
    out[j] = support_[j][rng.uniform_int(static_cast<int>(support_[j].size()))];
  return out;
}

double FiniteUniformProposal::log_density(const std::vector<double>& from,
                                          const std::vector<double>& to) const {
  (void)from;
  double total = 0.0;
  for (std::size_t j = 0; j < to.size(); ++j) {
    bool found = false;
    for (double v : support_[j]) found = found || v == to[j];
    if (!found) return -std::numeric_limits<double>::infinity();
    total -= std::log(static_cast<double>(support_[j].size()));
  }
  return total;
}

CorrelatedWalk::CorrelatedWalk(std::vector<double> diag_scales, std::vector<double> direction,
                               double direction_scale)
    : diag_(std::move(diag_scales)), dir_(std::move(direction)), dir_scale_(direction_scale) {
  require(diag_.size() == dir_.size(), "CorrelatedWalk: length mismatch");
  require(direction_scale >= 0.0, "CorrelatedWalk: negative direction scale");
  for (double s : diag_) require(s > 0.0, "CorrelatedWalk: scales must be > 0");

  // Sherman-Morrison pieces for Sigma = D + s^2 d d^T with D = diag(scale^2).
  double dtDid = 0.0;
  double log_det_d = 0.0;
  for (std::size_t j = 0; j < diag_.size(); ++j) {
    dtDid += dir_[j] * dir_[j] / (diag_[j] * diag_[j]);
    log_det_d += 2.0 * std::log(diag_[j]);
  }
  const double s2 = dir_scale_ * dir_scale_;
  log_det_ = log_det_d + std::log1p(s2 * dtDid);
  rank1_coeff_ = s2 / (1.0 + s2 * dtDid);
}

std::vector<double> CorrelatedWalk::propose(const std::vector<double>& current,
                                            RandomSource& rng) const {
  require(current.size() == diag_.size(), "CorrelatedWalk: block size mismatch");
  const double u = rng.normal();
  std::vector<double> out(current.size());
  for (std::size_t j = 0; j < current.size(); ++j)
    out[j] = current[j] + dir_scale_ * u * dir_[j] + diag_[j] * rng.normal();
  return out;
}

double CorrelatedWalk::log_density(const std::vector<double>& from,
                                   const std::vector<double>& to) const {
  // N(to; from, D + s^2 d d^T) via Sherman-Morrison.
  double quad_diag = 0.0, proj = 0.0;
  for (std::size_t j = 0; j < diag_.size(); ++j) {
    const double r = to[j] - from[j];
    const double dinv = 1.0 / (diag_[j] * diag_[j]);
    quad_diag += r * r * dinv;
    proj += dir_[j] * r * dinv;
  }
  const double quad = quad_diag - rank1_coeff_ * proj * proj;
  const double k = static_cast<double>(diag_.size());
  return -0.5 * (quad + log_det_ + k * std::log(2.0 * std::numbers::pi));
}

std::vector<double> DegenerateProposal::propose(const std::vector<double>& current,
                                                RandomSource& rng) const {
  (void)rng;
  return current;
}

double DegenerateProposal::log_density(const std::vector<double>& from,
                                       const std::vector<double>& to) const {
  return from == to ? 0.0 : -std::numeric_limits<double>::infinity();
}

}  // namespace ssfit
