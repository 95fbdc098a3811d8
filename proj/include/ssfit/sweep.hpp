#pragma once

#include <atomic>
#include <map>
#include <memory>
#include <mutex>

#include "ssfit/dataset.hpp"
#include "ssfit/kernels.hpp"
#include "ssfit/likelihood.hpp"
#include "ssfit/model_build.hpp"

namespace ssfit {

// Memoizing evaluator around the process model: spin-ups keyed by the static
// parameters (kappa, rmax, phi0), trajectory evaluations keyed by the full
// dynamics point (static + phi). One counted model run = one trajectory
// evaluation (with its spin-up). Thread-safe; memoized values make repeated
// evaluation at the chain's current point free.
class FitEvaluator {
public:
  struct Eval {
    std::vector<CatchRecord> catches;
  };

  FitEvaluator(const ModelBundle& bundle, const ObservationSet& obs);

  std::shared_ptr<const Eval> evaluate(const ParameterVector& pv);
  std::shared_ptr<const ModelState> spun_state_cached(const ParameterVector& pv);

  double loglik_from(const Eval& ev, const VarianceParams& var) const;
  double species_loglik_from(int species, const Eval& ev, const VarianceParams& var) const;
  double loglik(const ParameterVector& pv);

  long trajectory_runs() const { return runs_.load(); }

  // Drops every memoized entry not belonging to `keep` (the chain's current
  // point), bounding memory across a long chain.
  void retain_only(const ParameterVector& keep);

  const ObservationSet& obs() const { return obs_; }
  const ModelBundle& bundle() const { return bundle_; }

private:
  std::vector<double> static_key(const ParameterVector& pv) const;
  std::vector<double> full_key(const ParameterVector& pv) const;

  const ModelBundle& bundle_;
  const ObservationSet& obs_;
  std::map<std::vector<double>, std::shared_ptr<const ModelState>> spin_memo_;
  std::map<std::vector<double>, std::shared_ptr<const Eval>> traj_memo_;
  std::atomic<long> runs_{0};
  mutable std::mutex mutex_;
};

// MDA target over the per-species static sets {ln_rmax_i, phi0_i}; everything
// else (ln kappa, the rates matrix, the variances) is the held-fixed set,
// baked in from the base point. Surrogate i is the species-i likelihood
// factor; the full likelihood is the complete product.
class StaticsMdaTarget final : public MdaTarget {
public:
  StaticsMdaTarget(FitEvaluator& evaluator, const ParameterVector& base);

  int n_sets() const override { return n_; }
  const std::vector<int>& set_indices(int i) const override { return sets_[i]; }
  double log_prior_set(int i, const Point& point) const override;
  double surrogate(int i, const Point& point) override;
  double full_loglik(const Point& point) override;
  long model_runs() const override { return evaluator_.trajectory_runs(); }

  static Point flatten(const ParameterVector& pv);
  ParameterVector assemble(const Point& point) const;

private:
  FitEvaluator& evaluator_;
  ParameterVector base_;
  int n_;
  std::vector<std::vector<int>> sets_;
};

// PDA target over the yearly fishing-rate blocks. States carry the year-end
// densities plus that year's catches, so k_t comes straight off the state;
// the full likelihood runs a complete trajectory from the memoized spun-up
// initial state and is memoized per rates point.
class PhiPdaTarget final : public PdaTarget {
public:
  PhiPdaTarget(FitEvaluator& evaluator, const ParameterVector& base);

  int n_years() const override;
  int rates_per_year() const override;
  PdaState initial_state() override;
  PdaState advance(const PdaState& state, int year, const std::vector<double>& rates) override;
  double year_loglik(int year, const PdaState& state) override;
  double log_prior_year(int year, const std::vector<double>& rates) const override;
  double full_loglik(const Point& rates) override;
  long advance_count() const override { return advances_.load(); }
  long full_run_count() const override { return full_runs_.load(); }

  // Catches of a memoized full run (the accepted composite), if present.
  std::shared_ptr<const FitEvaluator::Eval> full_eval(const Point& rates) const;

private:
  struct YearState {
    ModelState state;
    CatchRecord catches;
  };
  FitEvaluator& evaluator_;
  ParameterVector base_;
  StaticParams statics_;
  std::atomic<long> advances_{0};
  std::atomic<long> full_runs_{0};
  std::map<Point, std::shared_ptr<const FitEvaluator::Eval>> full_memo_;
  mutable std::mutex mutex_;
};

// The four-step Metropolis-within-Gibbs sweep: (1) MDA over the per-species
// static sets, (2) a fixed number of PDA outer steps over the yearly rates,
// (3) a multi-proposal update of ln kappa and ln rmax, (4) conjugate variance
// draws. Proposal scales are per component; bounded blocks use reflection.
struct SweepPlan {
  double scale_lnrmax = 2.0;
  double scale_phi0 = 0.2;
  double scale_phi = 0.2;
  int pda_outer_steps = 8;
  int pda_subset_years = 0;  // 0 = perturb every year
  bool pda_prefetch = false; // speculative candidate batch (same chain, more concurrency)
  int calderhead_proposals = 8;
  double scale_lnkappa = 1.0;
  double scale_cal_lnrmax = 0.5;
  // > 0 adds a shared proposal component along (ln kappa up, every ln rmax
  // down), the trade-off direction the catches leave weakly identified.
  double cal_ridge_scale = 0.0;
  bool random_step_order = false;
};

SweepPlan sweep_plan_from_config(const Config& cfg);
void write_sweep_plan(Config& cfg, const SweepPlan& plan);

struct ChainState {
  ParameterVector pv;
  double loglik = 0.0;
  double log_prior = 0.0;
  std::shared_ptr<const FitEvaluator::Eval> eval;

  double log_post() const { return log_prior + loglik; }
};

ChainState init_chain_state(FitEvaluator& evaluator, const ParameterVector& start);

struct SweepStats {
  bool step1_outer = false;
  int step1_inner_accepts = 0;
  bool step2_any_outer = false;
  int step2_outer_accepts = 0;
  double step2_inner_accepts = 0;
  bool step3_moved = false;
  long runs = 0;
  long advances = 0;
};

// One full sweep; rng_base spawns one substream per structural slot so the
// chain is a pure function of (start, seed, iteration index).
SweepStats sweep_iteration(ChainState& state, const SweepPlan& plan, FitEvaluator& evaluator,
                           const RngStream& rng_base, int threads);

// Pilot tuning: short chains, per-block acceptance measured against the
// given bands, scales doubled above the band and halved below it.
struct PilotBands {
  double inner_lo = 0.05, inner_hi = 0.8;
  double outer_lo = 0.15, outer_hi = 0.45;
};

SweepPlan pilot_tune(ChainState& state, SweepPlan plan, FitEvaluator& evaluator,
                     std::uint64_t seed, int rounds, int iterations_per_round,
                     const PilotBands& bands, int threads);

}  // namespace ssfit
