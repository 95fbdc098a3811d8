#include "ssfit/rng.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace ssfit {

namespace {

std::uint64_t splitmix64(std::uint64_t& x) {
  x += 0x9e3779b97f4a7c15ULL;
  std::uint64_t z = x;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline std::uint64_t rotl(std::uint64_t x, int k) {
  return (x << k) | (x >> (64 - k));
}

}  // namespace

std::uint64_t mix_u64(std::uint64_t a, std::uint64_t b) {
  std::uint64_t x = a ^ (0x9e3779b97f4a7c15ULL + (b << 6) + (b >> 2));
  return splitmix64(x);
}

double RandomSource::uniform(double lo, double hi) {
  return lo + (hi - lo) * uniform();
}

double RandomSource::normal() {
  const double u1 = uniform();
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

double RandomSource::normal(double mean, double sd) {
  return mean + sd * normal();
}

// Marsaglia & Tsang (2000); shape < 1 boosted via the u^(1/shape) trick.
double RandomSource::gamma(double shape) {
  if (!(shape > 0.0)) throw std::invalid_argument("gamma: shape must be > 0");
  if (shape < 1.0) {
    const double u = uniform();
    return gamma(shape + 1.0) * std::pow(u, 1.0 / shape);
  }
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double x = normal();
    double v = 1.0 + c * x;
    if (v <= 0.0) continue;
    v = v * v * v;
    const double u = uniform();
    const double x2 = x * x;
    if (u < 1.0 - 0.0331 * x2 * x2) return d * v;
    if (std::log(u) < 0.5 * x2 + d * (1.0 - v + std::log(v))) return d * v;
  }
}

double RandomSource::inverse_gamma(double shape, double scale) {
  // If X ~ Gamma(shape, rate=scale) then 1/X ~ InvGamma(shape, scale).
  return scale / gamma(shape);
}

int RandomSource::uniform_int(int n) {
  if (n <= 0) throw std::invalid_argument("uniform_int: n must be > 0");
  int k = static_cast<int>(uniform() * n);
  return k < n ? k : n - 1;
}

RngStream::RngStream(std::uint64_t seed) {
  key_ = seed;
  seed_from(seed);
}

RngStream::RngStream(std::uint64_t seed, std::initializer_list<std::uint64_t> path) {
  std::uint64_t key = seed;
  for (std::uint64_t p : path) key = mix_u64(key, p);
  key_ = key;
  seed_from(key);
}

RngStream RngStream::substream(std::initializer_list<std::uint64_t> path) const {
  RngStream out(key_);
  std::uint64_t key = key_;
  for (std::uint64_t p : path) key = mix_u64(key, p);
  out.key_ = key;
  out.seed_from(key);
  return out;
}

void RngStream::seed_from(std::uint64_t key) {
  std::uint64_t x = key;
  for (auto& s : s_) s = splitmix64(x);
}

std::uint64_t RngStream::next_u64() {
  const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
  const std::uint64_t t = s_[1] << 17;
  s_[2] ^= s_[0];
  s_[3] ^= s_[1];
  s_[1] ^= s_[2];
  s_[0] ^= s_[3];
  s_[2] ^= t;
  s_[3] = rotl(s_[3], 45);
  return result;
}

double RngStream::uniform() {
  // 53-bit mantissa, offset by half an ulp so 0 and 1 are excluded.
  return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
}

ScriptedSource::ScriptedSource(std::vector<double> draws) : draws_(std::move(draws)) {}

double ScriptedSource::uniform() {
  if (next_ >= draws_.size()) throw std::logic_error("ScriptedSource exhausted");
  return draws_[next_++];
}

}  // namespace ssfit
