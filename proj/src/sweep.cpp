#include "ssfit/sweep.hpp"

#include <algorithm>
#include <cmath>

#include "ssfit/errors.hpp"
#include "ssfit/parallel.hpp"

namespace ssfit {

FitEvaluator::FitEvaluator(const ModelBundle& bundle, const ObservationSet& obs)
    : bundle_(bundle), obs_(obs) {
  require(obs.n_species == bundle.n_species(), "evaluator: observation width mismatch");
  require(obs.n_years == bundle.n_years, "evaluator: observation years mismatch");
}

std::vector<double> FitEvaluator::static_key(const ParameterVector& pv) const {
  std::vector<double> key;
  key.reserve(1 + pv.ln_rmax.size() + pv.phi0.size());
  key.push_back(pv.ln_kappa);
  key.insert(key.end(), pv.ln_rmax.begin(), pv.ln_rmax.end());
  key.insert(key.end(), pv.phi0.begin(), pv.phi0.end());
  return key;
}

std::vector<double> FitEvaluator::full_key(const ParameterVector& pv) const {
  std::vector<double> key = static_key(pv);
  key.insert(key.end(), pv.phi.v.begin(), pv.phi.v.end());
  return key;
}

std::shared_ptr<const ModelState> FitEvaluator::spun_state_cached(const ParameterVector& pv) {
  const auto key = static_key(pv);
  {
    std::lock_guard<std::mutex> lock(mutex_);
    auto it = spin_memo_.find(key);
    if (it != spin_memo_.end()) return it->second;
  }
  auto state = std::make_shared<const ModelState>(bundle_.spun_state(pv));
  std::lock_guard<std::mutex> lock(mutex_);
  return spin_memo_.emplace(key, std::move(state)).first->second;
}

std::shared_ptr<const FitEvaluator::Eval> FitEvaluator::evaluate(const ParameterVector& pv) {
  const auto key = full_key(pv);
  {
    std::lock_guard<std::mutex> lock(mutex_);
    auto it = traj_memo_.find(key);
    if (it != traj_memo_.end()) return it->second;
  }
  const auto m0 = spun_state_cached(pv);
  auto traj = bundle_.model->run_trajectory(*m0, pv.phi, pv.static_params());
  auto eval = std::make_shared<Eval>();
  eval->catches = std::move(traj.catches);
  runs_.fetch_add(1);
  std::lock_guard<std::mutex> lock(mutex_);
  return traj_memo_.emplace(key, std::move(eval)).first->second;
}

double FitEvaluator::loglik_from(const Eval& ev, const VarianceParams& var) const {
  return log_likelihood_full(ev.catches, obs_, var);
}

double FitEvaluator::species_loglik_from(int species, const Eval& ev,
                                         const VarianceParams& var) const {
  return log_likelihood_species(species, ev.catches, obs_, var);
}

double FitEvaluator::loglik(const ParameterVector& pv) {
  return loglik_from(*evaluate(pv), pv.variances);
}

void FitEvaluator::retain_only(const ParameterVector& keep) {
  const auto skey = static_key(keep);
  const auto fkey = full_key(keep);
  std::lock_guard<std::mutex> lock(mutex_);
  for (auto it = spin_memo_.begin(); it != spin_memo_.end();)
    it = it->first == skey ? std::next(it) : spin_memo_.erase(it);
  for (auto it = traj_memo_.begin(); it != traj_memo_.end();)
    it = it->first == fkey ? std::next(it) : traj_memo_.erase(it);
}

// --- Step 1 target -----------------------------------------------------------

StaticsMdaTarget::StaticsMdaTarget(FitEvaluator& evaluator, const ParameterVector& base)
    : evaluator_(evaluator), base_(base), n_(base.n_species()) {
  sets_.resize(n_);
  for (int i = 0; i < n_; ++i) sets_[i] = {2 * i, 2 * i + 1};
}

Point StaticsMdaTarget::flatten(const ParameterVector& pv) {
  Point p(2 * pv.n_species());
  for (int i = 0; i < pv.n_species(); ++i) {
    p[2 * i] = pv.ln_rmax[i];
    p[2 * i + 1] = pv.phi0[i];
  }
  return p;
}

ParameterVector StaticsMdaTarget::assemble(const Point& point) const {
  ParameterVector pv = base_;
  for (int i = 0; i < n_; ++i) {
    pv.ln_rmax[i] = point[2 * i];
    pv.phi0[i] = point[2 * i + 1];
  }
  return pv;
}

double StaticsMdaTarget::log_prior_set(int i, const Point& point) const {
  const auto& prior = evaluator_.bundle().prior;
  return prior.ln_rmax.logpdf(point[2 * i]) + prior.phi0.logpdf(point[2 * i + 1]);
}

double StaticsMdaTarget::surrogate(int i, const Point& point) {
  const ParameterVector pv = assemble(point);
  return evaluator_.species_loglik_from(i, *evaluator_.evaluate(pv), pv.variances);
}

double StaticsMdaTarget::full_loglik(const Point& point) {
  const ParameterVector pv = assemble(point);
  return evaluator_.loglik_from(*evaluator_.evaluate(pv), pv.variances);
}

// --- Step 2 target -----------------------------------------------------------

PhiPdaTarget::PhiPdaTarget(FitEvaluator& evaluator, const ParameterVector& base)
    : evaluator_(evaluator), base_(base), statics_(base.static_params()) {}

int PhiPdaTarget::n_years() const { return evaluator_.bundle().n_years; }
int PhiPdaTarget::rates_per_year() const { return base_.n_species(); }

PdaState PhiPdaTarget::initial_state() {
  auto m0 = evaluator_.spun_state_cached(base_);
  auto ys = std::make_shared<YearState>();
  ys->state = *m0;
  return std::shared_ptr<const void>(ys, static_cast<const void*>(ys.get()));
}

PdaState PhiPdaTarget::advance(const PdaState& state, int year, const std::vector<double>& rates) {
  (void)year;
  const auto* ys = static_cast<const YearState*>(state.get());
  FishingRates r;
  r.phi = rates;
  StepResult step = evaluator_.bundle().model->step_year(ys->state, r, statics_);
  auto next = std::make_shared<YearState>();
  next->state = std::move(step.state);
  next->catches = std::move(step.catches);
  advances_.fetch_add(1);
  return std::shared_ptr<const void>(next, static_cast<const void*>(next.get()));
}

double PhiPdaTarget::year_loglik(int year, const PdaState& state) {
  const auto* ys = static_cast<const YearState*>(state.get());
  return log_likelihood_year(year, ys->catches, evaluator_.obs(), base_.variances);
}

double PhiPdaTarget::log_prior_year(int year, const std::vector<double>& rates) const {
  (void)year;
  const auto& prior = evaluator_.bundle().prior;
  double total = 0.0;
  for (double r : rates) total += prior.phi.logpdf(r);
  return total;
}

double PhiPdaTarget::full_loglik(const Point& rates) {
  {
    std::lock_guard<std::mutex> lock(mutex_);
    auto it = full_memo_.find(rates);
    if (it != full_memo_.end())
      return evaluator_.loglik_from(*it->second, base_.variances);
  }
  ParameterVector pv = base_;
  pv.phi.v = rates;
  const auto m0 = evaluator_.spun_state_cached(base_);
  auto traj = evaluator_.bundle().model->run_trajectory(*m0, pv.phi, statics_);
  auto eval = std::make_shared<FitEvaluator::Eval>();
  eval->catches = std::move(traj.catches);
  full_runs_.fetch_add(1);
  std::lock_guard<std::mutex> lock(mutex_);
  auto it = full_memo_.emplace(rates, std::move(eval)).first;
  return evaluator_.loglik_from(*it->second, base_.variances);
}

std::shared_ptr<const FitEvaluator::Eval> PhiPdaTarget::full_eval(const Point& rates) const {
  std::lock_guard<std::mutex> lock(mutex_);
  auto it = full_memo_.find(rates);
  return it == full_memo_.end() ? nullptr : it->second;
}

// --- Sweep -------------------------------------------------------------------

SweepPlan sweep_plan_from_config(const Config& cfg) {
  SweepPlan plan;
  plan.scale_lnrmax = cfg.get_real("sweep.scale_lnrmax", plan.scale_lnrmax);
  plan.scale_phi0 = cfg.get_real("sweep.scale_phi0", plan.scale_phi0);
  plan.scale_phi = cfg.get_real("sweep.scale_phi", plan.scale_phi);
  plan.pda_outer_steps = static_cast<int>(cfg.get_int("sweep.pda_outer_steps", plan.pda_outer_steps));
  plan.pda_subset_years =
      static_cast<int>(cfg.get_int("sweep.pda_subset_years", plan.pda_subset_years));
  plan.pda_prefetch = cfg.get_bool("sweep.pda_prefetch", plan.pda_prefetch);
  plan.calderhead_proposals =
      static_cast<int>(cfg.get_int("sweep.calderhead_proposals", plan.calderhead_proposals));
  plan.scale_lnkappa = cfg.get_real("sweep.scale_lnkappa", plan.scale_lnkappa);
  plan.scale_cal_lnrmax = cfg.get_real("sweep.scale_cal_lnrmax", plan.scale_cal_lnrmax);
  plan.cal_ridge_scale = cfg.get_real("sweep.cal_ridge_scale", plan.cal_ridge_scale);
  plan.random_step_order = cfg.get_bool("sweep.random_step_order", plan.random_step_order);
  require(plan.pda_outer_steps >= 1, "sweep.pda_outer_steps must be >= 1");
  require(plan.calderhead_proposals >= 1, "sweep.calderhead_proposals must be >= 1");
  return plan;
}

void write_sweep_plan(Config& cfg, const SweepPlan& plan) {
  cfg.set_real("sweep.scale_lnrmax", plan.scale_lnrmax);
  cfg.set_real("sweep.scale_phi0", plan.scale_phi0);
  cfg.set_real("sweep.scale_phi", plan.scale_phi);
  cfg.set_int("sweep.pda_outer_steps", plan.pda_outer_steps);
  cfg.set_int("sweep.pda_subset_years", plan.pda_subset_years);
  cfg.set("sweep.pda_prefetch", plan.pda_prefetch ? "true" : "false");
  cfg.set_int("sweep.calderhead_proposals", plan.calderhead_proposals);
  cfg.set_real("sweep.scale_lnkappa", plan.scale_lnkappa);
  cfg.set_real("sweep.scale_cal_lnrmax", plan.scale_cal_lnrmax);
  cfg.set_real("sweep.cal_ridge_scale", plan.cal_ridge_scale);
  cfg.set("sweep.random_step_order", plan.random_step_order ? "true" : "false");
}

ChainState init_chain_state(FitEvaluator& evaluator, const ParameterVector& start) {
  ChainState state;
  state.pv = start;
  state.eval = evaluator.evaluate(start);
  state.loglik = evaluator.loglik_from(*state.eval, start.variances);
  state.log_prior = log_prior(start, evaluator.bundle().prior);
  require(std::isfinite(state.log_post()), "chain start has non-finite posterior");
  return state;
}

namespace {

void step1_mda(ChainState& state, const SweepPlan& plan, FitEvaluator& evaluator,
               RngStream rng, int threads, SweepStats& stats) {
  const auto& prior = evaluator.bundle().prior;
  StaticsMdaTarget target(evaluator, state.pv);
  const Point current = StaticsMdaTarget::flatten(state.pv);

  ReflectedWalk walk({plan.scale_lnrmax, plan.scale_phi0},
                     {prior.ln_rmax.lo, prior.phi0.lo}, {prior.ln_rmax.hi, prior.phi0.hi});
  std::vector<const BlockProposal*> proposals(state.pv.n_species(), &walk);

  auto outcome = mda_step(current, target, proposals, rng, state.loglik, threads);

  stats.step1_outer = outcome.accepted;
  for (char a : outcome.inner_accepted) stats.step1_inner_accepts += a != 0;
  if (outcome.accepted) {
    state.pv = target.assemble(outcome.point);
    state.loglik = outcome.full_loglik;
    state.eval = evaluator.evaluate(state.pv);  // memoized
  }
}

void step2_pda(ChainState& state, const SweepPlan& plan, FitEvaluator& evaluator,
               const RngStream& rng_base, int threads, SweepStats& stats) {
  const int T = evaluator.bundle().n_years;

  PhiPdaTarget target(evaluator, state.pv);

  const auto& prior = evaluator.bundle().prior;
  const int ns = state.pv.n_species();
  ReflectedWalk walk(std::vector<double>(ns, plan.scale_phi),
                     std::vector<double>(ns, prior.phi.lo), std::vector<double>(ns, prior.phi.hi));

  // Subset choices for all outer steps are drawn up front from their own
  // substream, so the candidate construction never depends on interleaving.
  std::vector<std::vector<char>> selected(plan.pda_outer_steps);
  if (plan.pda_subset_years > 0 && plan.pda_subset_years < T) {
    RngStream subset_rng = rng_base.substream({0x5e1ec7});
    for (auto& sel : selected) {
      sel.assign(T, 0);
      std::vector<int> years(T);
      for (int t = 0; t < T; ++t) years[t] = t;
      for (int k = 0; k < plan.pda_subset_years; ++k) {
        const int j = k + subset_rng.uniform_int(T - k);
        std::swap(years[k], years[j]);
        sel[years[k]] = 1;
      }
    }
  }

  Point rates = state.pv.phi.v;
  double loglik = state.loglik;

  // Speculative batch: candidates for the all-reject path are built
  // concurrently from the same start point. A candidate stays valid while
  // every earlier outer proposal was rejected; the first acceptance
  // invalidates the rest, which are then rebuilt from the true state with
  // their original substreams. Either way the chain is the exact composition
  // of pda_outer_steps sequential kernel applications.
  std::vector<std::optional<KernelOutcome>> prebuilt(plan.pda_outer_steps);
  if (plan.pda_prefetch && threads > 1) {
    parallel_for(plan.pda_outer_steps, threads, [&](int w) {
      RngStream sub = rng_base.substream({0xda, static_cast<std::uint64_t>(w)});
      prebuilt[w] = pda_step(rates, target, walk, sub, loglik,
                             selected[w].empty() ? nullptr : &selected[w], 1);
    });
  }

  bool diverged = false;
  for (int w = 0; w < plan.pda_outer_steps; ++w) {
    KernelOutcome outcome;
    if (!diverged && prebuilt[w]) {
      outcome = std::move(*prebuilt[w]);
    } else {
      RngStream sub = rng_base.substream({0xda, static_cast<std::uint64_t>(w)});
      outcome = pda_step(rates, target, walk, sub, loglik,
                         selected[w].empty() ? nullptr : &selected[w], threads);
    }
    stats.step2_outer_accepts += outcome.accepted;
    double inner = 0;
    for (char a : outcome.inner_accepted) inner += a != 0;
    stats.step2_inner_accepts += inner;
    if (outcome.accepted) {
      rates = outcome.point;
      loglik = outcome.full_loglik;
      diverged = true;  // later prebuilt candidates assumed the old rates
    }
  }

  stats.step2_any_outer = stats.step2_outer_accepts > 0;
  if (rates != state.pv.phi.v) {
    state.pv.phi.v = rates;
    state.loglik = loglik;
    auto eval = target.full_eval(rates);
    state.eval = eval ? eval : evaluator.evaluate(state.pv);
  }
}

void step3_calderhead(ChainState& state, const SweepPlan& plan, FitEvaluator& evaluator,
                      RngStream rng, int threads, SweepStats& stats) {
  const auto& prior = evaluator.bundle().prior;
  const int ns = state.pv.n_species();

  Point current(1 + ns);
  current[0] = state.pv.ln_kappa;
  for (int i = 0; i < ns; ++i) current[1 + i] = state.pv.ln_rmax[i];

  std::vector<double> scales(1 + ns, plan.scale_cal_lnrmax);
  scales[0] = plan.scale_lnkappa;
  std::vector<double> lo(1 + ns, prior.ln_rmax.lo), hi(1 + ns, prior.ln_rmax.hi);
  lo[0] = prior.ln_kappa.lo;
  hi[0] = prior.ln_kappa.hi;
  ReflectedWalk boxed(scales, lo, hi);
  std::vector<double> ridge_dir(1 + ns, -1.0);
  ridge_dir[0] = 1.0;
  CorrelatedWalk ridged(scales, ridge_dir, plan.cal_ridge_scale);
  const BlockProposal& walk =
      plan.cal_ridge_scale > 0.0 ? static_cast<const BlockProposal&>(ridged)
                                 : static_cast<const BlockProposal&>(boxed);

  const ParameterVector base = state.pv;
  auto block_log_post = [&](const Point& p) {
    double lp = prior.ln_kappa.logpdf(p[0]);
    for (int i = 0; i < ns; ++i) lp += prior.ln_rmax.logpdf(p[1 + i]);
    if (!std::isfinite(lp)) return lp;
    ParameterVector pv = base;
    pv.ln_kappa = p[0];
    for (int i = 0; i < ns; ++i) pv.ln_rmax[i] = p[1 + i];
    return lp + evaluator.loglik(pv);
  };

  const double cur_post = prior.ln_kappa.logpdf(current[0]) +
                          [&] {
                            double s = 0.0;
                            for (int i = 0; i < ns; ++i) s += prior.ln_rmax.logpdf(current[1 + i]);
                            return s;
                          }() +
                          state.loglik;

  auto outcome = calderhead_step(current, block_log_post, plan.calderhead_proposals, walk, rng,
                                 cur_post, threads);
  stats.step3_moved = outcome.accepted;
  if (outcome.accepted) {
    state.pv.ln_kappa = outcome.point[0];
    for (int i = 0; i < ns; ++i) state.pv.ln_rmax[i] = outcome.point[1 + i];
    state.eval = evaluator.evaluate(state.pv);  // memoized from the candidate evaluation
    state.loglik = evaluator.loglik_from(*state.eval, state.pv.variances);
  }
}

void step4_gibbs(ChainState& state, FitEvaluator& evaluator, RngStream rng) {
  const ResidualSums sums = residual_sums(state.eval->catches, evaluator.obs());
  ChannelResiduals commercial{sums.ss_c, sums.n_c};
  ChannelResiduals survey{sums.ss_s, sums.n_s};
  state.pv.variances = gibbs_variance_update(commercial, survey, evaluator.bundle().prior,
                                             state.pv.variances, rng);
  state.loglik = evaluator.loglik_from(*state.eval, state.pv.variances);
}

}  // namespace

SweepStats sweep_iteration(ChainState& state, const SweepPlan& plan, FitEvaluator& evaluator,
                           const RngStream& rng_base, int threads) {
  SweepStats stats;
  const long runs0 = evaluator.trajectory_runs();

  int order[4] = {0, 1, 2, 3};
  if (plan.random_step_order) {
    RngStream shuffle = rng_base.substream({0x0dd});
    for (int k = 0; k < 3; ++k) std::swap(order[k], order[k + shuffle.uniform_int(4 - k)]);
  }

  for (int s : order) {
    switch (s) {
      case 0:
        step1_mda(state, plan, evaluator, rng_base.substream({1}), threads, stats);
        break;
      case 1:
        step2_pda(state, plan, evaluator, rng_base.substream({2}), threads, stats);
        break;
      case 2:
        step3_calderhead(state, plan, evaluator, rng_base.substream({3}), threads, stats);
        break;
      default:
        step4_gibbs(state, evaluator, rng_base.substream({4}));
        break;
    }
  }

  state.log_prior = log_prior(state.pv, evaluator.bundle().prior);
  stats.runs = evaluator.trajectory_runs() - runs0;
  evaluator.retain_only(state.pv);
  return stats;
}

SweepPlan pilot_tune(ChainState& state, SweepPlan plan, FitEvaluator& evaluator,
                     std::uint64_t seed, int rounds, int iterations_per_round,
                     const PilotBands& bands, int threads) {
  const auto& prior = evaluator.bundle().prior;
  const double rmax_span = prior.ln_rmax.hi - prior.ln_rmax.lo;
  const double phi_span = prior.phi.hi - prior.phi.lo;
  const double kappa_span = prior.ln_kappa.hi - prior.ln_kappa.lo;

  auto adjust = [](double& scale, double rate, double lo, double hi, double cap) {
    if (rate > hi)
      scale = std::min(scale * 2.0, cap);
    else if (rate < lo)
      scale = std::max(scale * 0.5, cap * 1e-5);
  };

  for (int round = 0; round < rounds; ++round) {
    double inner1 = 0, outer2 = 0, inner2 = 0, moved3 = 0;
    const int n_sets = state.pv.n_species();
    for (int it = 0; it < iterations_per_round; ++it) {
      RngStream base(seed, {0x9110u, static_cast<std::uint64_t>(round),
                            static_cast<std::uint64_t>(it)});
      SweepStats stats = sweep_iteration(state, plan, evaluator, base, threads);
      inner1 += stats.step1_inner_accepts / static_cast<double>(n_sets);
      outer2 += stats.step2_outer_accepts / static_cast<double>(plan.pda_outer_steps);
      const int pda_years = plan.pda_subset_years > 0
                                ? std::min(plan.pda_subset_years, evaluator.bundle().n_years)
                                : evaluator.bundle().n_years;
      inner2 += stats.step2_inner_accepts /
                static_cast<double>(plan.pda_outer_steps * pda_years);
      moved3 += stats.step3_moved;
    }
    const double n = iterations_per_round;
    inner1 /= n;
    outer2 /= n;
    inner2 /= n;
    moved3 /= n;

    const bool ok1 = inner1 >= bands.inner_lo && inner1 <= bands.inner_hi;
    const bool ok2 = outer2 >= bands.outer_lo && outer2 <= bands.outer_hi;
    const bool ok3 = moved3 >= bands.outer_lo && moved3 <= bands.outer_hi;
    if (ok1 && ok2 && ok3) break;

    if (!ok1) {
      adjust(plan.scale_lnrmax, inner1, bands.inner_lo, bands.inner_hi, rmax_span);
      adjust(plan.scale_phi0, inner1, bands.inner_lo, bands.inner_hi, phi_span);
    }
    if (!ok2) adjust(plan.scale_phi, outer2, bands.outer_lo, bands.outer_hi, phi_span);
    if (!ok3) {
      adjust(plan.scale_lnkappa, moved3, bands.outer_lo, bands.outer_hi, kappa_span);
      adjust(plan.scale_cal_lnrmax, moved3, bands.outer_lo, bands.outer_hi, rmax_span);
      if (plan.cal_ridge_scale > 0.0)
        adjust(plan.cal_ridge_scale, moved3, bands.outer_lo, bands.outer_hi, kappa_span);
    }
  }
  return plan;
}

}  // namespace ssfit
