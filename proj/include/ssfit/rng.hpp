#pragma once

#include <cstdint>
#include <initializer_list>
#include <vector>

namespace ssfit {

// Source of uniform variates behind every stochastic decision. All samplers
// draw their randomness through this interface, one uniform per decision slot,
// so tests can script exact branch paths and enumerate kernels.
class RandomSource {
public:
  virtual ~RandomSource() = default;

  // Strictly inside (0,1).
  virtual double uniform() = 0;

  double uniform(double lo, double hi);
  double normal();  // standard normal (Box-Muller, consumes 2 uniforms)
  double normal(double mean, double sd);
  double gamma(double shape);  // unit scale, Marsaglia-Tsang
  double inverse_gamma(double shape, double scale);
  int uniform_int(int n);  // 0..n-1
};

// Combine two 64-bit values into a well-mixed one (splitmix64 finalizer).
std::uint64_t mix_u64(std::uint64_t a, std::uint64_t b);

// xoshiro256** stream keyed by (seed, path). Streams with distinct paths are
// independent for practical purposes; identical (seed, path) reproduces the
// same sequence exactly. Checkpoint resume and scheduling-independent parallel
// evaluation both rely on deriving streams from structural indices instead of
// carrying mutable generator state around.
class RngStream final : public RandomSource {
public:
  explicit RngStream(std::uint64_t seed);
  RngStream(std::uint64_t seed, std::initializer_list<std::uint64_t> path);

  // Derive a child stream for a structurally indexed sub-task.
  RngStream substream(std::initializer_list<std::uint64_t> path) const;

  double uniform() override;
  std::uint64_t next_u64();

private:
  void seed_from(std::uint64_t key);
  std::uint64_t key_;   // derivation key, not mutated by draws
  std::uint64_t s_[4];  // xoshiro state
};

// Fixed sequence of uniforms; throws when exhausted. Test harness tool for
// forcing kernels down chosen accept/reject branches.
class ScriptedSource final : public RandomSource {
public:
  explicit ScriptedSource(std::vector<double> draws);
  double uniform() override;
  std::size_t consumed() const { return next_; }

private:
  std::vector<double> draws_;
  std::size_t next_ = 0;
};

}  // namespace ssfit
