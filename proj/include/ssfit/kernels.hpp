#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <vector>

#include "ssfit/params.hpp"
#include "ssfit/proposals.hpp"
#include "ssfit/rng.hpp"

namespace ssfit {

// Partitioned target for the marginal delayed-acceptance kernel. A point is a
// flat vector; the first n_sets() blocks are updatable, anything outside them
// is carried along untouched. Implementations memoize underlying model
// evaluations per point (one run yields every surrogate and the full
// likelihood) and count distinct runs.
class MdaTarget {
public:
  virtual ~MdaTarget() = default;
  virtual int n_sets() const = 0;
  virtual const std::vector<int>& set_indices(int i) const = 0;
  virtual double log_prior_set(int i, const Point& point) const = 0;
  virtual double surrogate(int i, const Point& point) = 0;   // log l_i(y | point)
  virtual double full_loglik(const Point& point) = 0;        // log l(y | point)
  virtual long model_runs() const = 0;
};

// Year-sequenced target for the particle delayed-acceptance kernel: an initial
// state, a deterministic one-year advance, per-year likelihood factors k_t,
// and a full-likelihood evaluation that runs a complete trajectory.
using PdaState = std::shared_ptr<const void>;

class PdaTarget {
public:
  virtual ~PdaTarget() = default;
  virtual int n_years() const = 0;
  virtual int rates_per_year() const = 0;
  virtual PdaState initial_state() = 0;
  virtual PdaState advance(const PdaState& state, int year,
                           const std::vector<double>& rates) = 0;        // counted
  virtual double year_loglik(int year, const PdaState& state) = 0;       // log k_t
  virtual double log_prior_year(int year, const std::vector<double>& rates) const = 0;
  virtual double full_loglik(const Point& rates) = 0;  // counted as one full run
  virtual long advance_count() const = 0;
  virtual long full_run_count() const = 0;
};

struct KernelOutcome {
  Point point;                 // resulting point (rates matrix, flattened, for PDA)
  bool accepted = false;       // outer (or only) accept decision
  double outer_alpha = 1.0;    // acceptance probability actually used
  double log_post = 0.0;       // log posterior at `point` where the kernel tracks it
  double full_loglik = 0.0;    // log likelihood at `point` (MDA/PDA)
  std::vector<double> inner_alpha;   // per-set / per-year inner probabilities
  std::vector<char> inner_accepted;
  long model_runs = 0;         // underlying evaluations consumed by this step
  long advances = 0;           // PDA: one-year advances consumed by this step

  // Multi-proposal bookkeeping: candidate points (index 0 = current), the
  // transition probabilities out of the current state, and the sampled index.
  std::vector<Point> candidates;
  std::vector<double> move_probs;
  int chosen = 0;
};

// One Metropolis-Hastings step on log_post. Consumes the proposal's draws and
// then exactly one acceptance uniform; ties (alpha == 1) accept.
KernelOutcome mh_step(const Point& current, const std::function<double(const Point&)>& log_post,
                      const BlockProposal& proposal, RandomSource& rng,
                      std::optional<double> current_log_post = std::nullopt);

// One iteration of the marginal delayed-acceptance kernel. Stage 1 proposes
// each set independently under its surrogate (evaluations may run
// concurrently); stage 2 accepts the composite with the exact correcting
// ratio, using the reverse inner probabilities at the required cross points.
// Draw order: all set proposals, then one inner uniform per set, then one
// outer uniform.
KernelOutcome mda_step(const Point& current, MdaTarget& target,
                       const std::vector<const BlockProposal*>& proposals, RandomSource& rng,
                       double current_full_loglik, int threads = 1);

// One iteration of the particle delayed-acceptance kernel. Maintains the
// composite path M and the current-rate path Q; per year proposes new rates,
// advances both paths under both rate choices, and applies the inner
// acceptance; the final stage accepts the composite using the Q-path reverse
// terms and one fresh full-likelihood run. `selected`, when given, marks the
// years to perturb; others use the degenerate proposal and contribute
// ratio 1. Draw order per year: proposal draws then one inner uniform
// (selected years only); one outer uniform at the end.
KernelOutcome pda_step(const Point& current_rates, PdaTarget& target,
                       const BlockProposal& proposal, RandomSource& rng,
                       double current_full_loglik,
                       const std::vector<char>* selected = nullptr, int threads = 1);

// Calderhead-style multi-proposal step: K proposals drawn from the current
// point, candidate weights posterior x proposal-density products, and K
// transitions of the Metropolis-type chain on the K+1 candidates, with the
// end state sampled from the composite row (K = 1 reduces to plain
// Metropolis-Hastings). Draw order: K proposal draws, then one selection
// uniform.
KernelOutcome calderhead_step(const Point& current,
                              const std::function<double(const Point&)>& log_post, int n_proposals,
                              const BlockProposal& proposal, RandomSource& rng,
                              std::optional<double> current_log_post = std::nullopt,
                              int threads = 1);

// Conjugate inverse-gamma update of the observation variances given sums of
// squared log residuals. Frozen commercial entries are returned bit-identical.
struct ChannelResiduals {
  std::vector<double> ss;
  std::vector<int> n;
};
VarianceParams gibbs_variance_update(const ChannelResiduals& commercial,
                                     const ChannelResiduals& survey, const PriorSpec& prior,
                                     const VarianceParams& current, RandomSource& rng);

}  // namespace ssfit
