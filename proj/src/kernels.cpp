#include "ssfit/kernels.hpp"

#include <cmath>
#include <limits>

#include "ssfit/errors.hpp"
#include "ssfit/parallel.hpp"

namespace ssfit {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// log(1 - e^x) for x <= 0.
double log1mexp(double x) {
  if (x == kNegInf) return 0.0;
  if (x >= 0.0) return kNegInf;
  if (x < -0.693147180559945309) return std::log1p(-std::exp(x));
  return std::log(-std::expm1(x));
}

// One acceptance decision. Always consumes exactly one uniform so that branch
// scripting and enumeration see a fixed draw pattern; exact ties accept.
bool accept_log(double log_alpha, RandomSource& rng) {
  const double u = rng.uniform();
  if (std::isnan(log_alpha)) return false;
  return log_alpha >= 0.0 || std::log(u) < log_alpha;
}

double alpha_from_log(double log_alpha) {
  if (std::isnan(log_alpha)) return 0.0;
  return std::exp(std::min(0.0, log_alpha));
}

std::vector<double> gather(const Point& point, const std::vector<int>& idx) {
  std::vector<double> out(idx.size());
  for (std::size_t j = 0; j < idx.size(); ++j) out[j] = point[idx[j]];
  return out;
}

void scatter(Point& point, const std::vector<int>& idx, const std::vector<double>& values) {
  for (std::size_t j = 0; j < idx.size(); ++j) point[idx[j]] = values[j];
}

}  // namespace

KernelOutcome mh_step(const Point& current, const std::function<double(const Point&)>& log_post,
                      const BlockProposal& proposal, RandomSource& rng,
                      std::optional<double> current_log_post) {
  KernelOutcome out;
  const double lp_cur = current_log_post ? *current_log_post : log_post(current);
  require(std::isfinite(lp_cur), "mh_step: current point has non-finite posterior");

  const Point prop = proposal.propose(current, rng);
  const double lp_prop = log_post(prop);

  double log_alpha = lp_prop - lp_cur;
  if (!proposal.symmetric())
    log_alpha += proposal.log_density(prop, current) - proposal.log_density(current, prop);

  out.outer_alpha = alpha_from_log(log_alpha);
  out.accepted = accept_log(log_alpha, rng);
  out.point = out.accepted ? prop : current;
  out.log_post = out.accepted ? lp_prop : lp_cur;
  return out;
}

KernelOutcome mda_step(const Point& current, MdaTarget& target,
                       const std::vector<const BlockProposal*>& proposals, RandomSource& rng,
                       double current_full_loglik, int threads) {
  const int n = target.n_sets();
  require(static_cast<int>(proposals.size()) == n, "mda_step: one proposal per set required");
  require(std::isfinite(current_full_loglik), "mda_step: current point must be feasible");

  KernelOutcome out;
  out.inner_alpha.assign(n, 1.0);
  out.inner_accepted.assign(n, 0);
  const long runs_before = target.model_runs();

  // Draw every set's proposal up front; evaluation can then fan out.
  std::vector<std::vector<double>> cur_vals(n), prop_vals(n);
  std::vector<char> degenerate(n, 0);
  std::vector<Point> prop_points(n);
  for (int i = 0; i < n; ++i) {
    const auto& idx = target.set_indices(i);
    cur_vals[i] = gather(current, idx);
    prop_vals[i] = proposals[i]->propose(cur_vals[i], rng);
    degenerate[i] = prop_vals[i] == cur_vals[i];
    prop_points[i] = current;
    scatter(prop_points[i], idx, prop_vals[i]);
  }

  // Current-point surrogates share one underlying evaluation.
  std::vector<double> li_cur(n), li_prop(n, 0.0);
  for (int i = 0; i < n; ++i) li_cur[i] = target.surrogate(i, current);

  // Stage 1: N independent surrogate evaluations, one per set.
  parallel_for(n, threads, [&](int i) {
    if (!degenerate[i]) li_prop[i] = target.surrogate(i, prop_points[i]);
  });

  // Inner Metropolis decisions under the surrogates. Scores are kept as one
  // fused prior+likelihood sum per point so reverse differences cancel
  // bit-exactly when a surrogate coincides with the full likelihood.
  std::vector<double> delta(n, 0.0);
  std::vector<char> changed(n, 0);
  Point composite = current;
  for (int i = 0; i < n; ++i) {
    if (degenerate[i]) {
      out.inner_alpha[i] = 1.0;
      out.inner_accepted[i] = accept_log(0.0, rng);
      continue;
    }
    const double s_cur = target.log_prior_set(i, current) + li_cur[i];
    const double s_prop = target.log_prior_set(i, prop_points[i]) + li_prop[i];
    delta[i] = s_prop - s_cur;
    const double log_alpha = std::min(0.0, delta[i]);
    out.inner_alpha[i] = alpha_from_log(log_alpha);
    const bool acc = accept_log(log_alpha, rng);
    out.inner_accepted[i] = acc;
    if (acc) {
      scatter(composite, target.set_indices(i), prop_vals[i]);
      changed[i] = 1;
    }
  }

  // Stage 2: exact correcting ratio for the composite. Cross points take the
  // composite and put one set back to its current (changed sets, reverse
  // probability) or proposed (unchanged sets) value.
  const double ll_comp = target.full_loglik(composite);

  std::vector<Point> cross(n);
  for (int i = 0; i < n; ++i) {
    if (degenerate[i]) continue;
    cross[i] = composite;
    scatter(cross[i], target.set_indices(i), changed[i] ? cur_vals[i] : prop_vals[i]);
  }
  std::vector<double> li_cross(n, 0.0), li_comp_set(n, 0.0);
  parallel_for(n, threads, [&](int i) {
    if (degenerate[i]) return;
    li_cross[i] = target.surrogate(i, cross[i]);
    li_comp_set[i] = target.surrogate(i, composite);
  });

  double lp_changed_prop = 0.0, lp_changed_cur = 0.0;
  for (int i = 0; i < n; ++i) {
    if (!changed[i]) continue;
    lp_changed_prop += target.log_prior_set(i, composite);
    lp_changed_cur += target.log_prior_set(i, current);
  }
  const double u_comp = lp_changed_prop + ll_comp;
  const double u_cur = lp_changed_cur + current_full_loglik;
  double outer_log = u_comp - u_cur;

  for (int i = 0; i < n; ++i) {
    if (degenerate[i]) continue;  // exact-equality proposal: ratio contribution 1
    const double s_comp = target.log_prior_set(i, composite) + li_comp_set[i];
    const double s_cross = target.log_prior_set(i, cross[i]) + li_cross[i];
    if (changed[i]) {
      outer_log += std::min(0.0, s_cross - s_comp) - std::min(0.0, delta[i]);
      if (!proposals[i]->symmetric())
        outer_log += proposals[i]->log_density(prop_vals[i], cur_vals[i]) -
                     proposals[i]->log_density(cur_vals[i], prop_vals[i]);
    } else {
      // alpha_i = 1 with the move rejected cannot arise: ties accept.
      if (delta[i] >= 0.0)
        throw std::logic_error("mda_step: rejected inner move with acceptance probability 1");
      outer_log += log1mexp(std::min(0.0, s_cross - s_comp)) - log1mexp(std::min(0.0, delta[i]));
    }
  }

  out.outer_alpha = alpha_from_log(outer_log);
  out.accepted = accept_log(outer_log, rng);
  out.point = out.accepted ? composite : current;
  out.full_loglik = out.accepted ? ll_comp : current_full_loglik;
  out.model_runs = target.model_runs() - runs_before;
  return out;
}

KernelOutcome pda_step(const Point& current_rates, PdaTarget& target,
                       const BlockProposal& proposal, RandomSource& rng,
                       double current_full_loglik, const std::vector<char>* selected,
                       int threads) {
  const int T = target.n_years();
  const int R = target.rates_per_year();
  require(current_rates.size() == static_cast<std::size_t>(T) * R,
          "pda_step: rates length mismatch");
  require(!selected || static_cast<int>(selected->size()) == T,
          "pda_step: selection length mismatch");
  require(std::isfinite(current_full_loglik), "pda_step: current point must be feasible");

  KernelOutcome out;
  out.inner_alpha.assign(T, 1.0);
  out.inner_accepted.assign(T, 0);
  const long advances_before = target.advance_count();
  const long full_before = target.full_run_count();

  PdaState m_state = target.initial_state();  // composite-so-far path
  PdaState q_state = m_state;                 // current-rate path

  Point composite = current_rates;
  std::vector<double> delta(T, 0.0), s_q_cur(T, 0.0), s_q_prop(T, 0.0);
  std::vector<char> changed(T, 0), active(T, 0);
  std::vector<std::vector<double>> cur_blocks(T), prop_blocks(T);

  for (int t = 1; t <= T; ++t) {
    const int k = t - 1;
    cur_blocks[k].assign(current_rates.begin() + static_cast<std::size_t>(k) * R,
                         current_rates.begin() + static_cast<std::size_t>(k + 1) * R);
    const bool sel = !selected || (*selected)[k] != 0;

    bool degenerate = true;
    if (sel) {
      prop_blocks[k] = proposal.propose(cur_blocks[k], rng);
      degenerate = prop_blocks[k] == cur_blocks[k];
    }

    if (!sel || degenerate) {
      // Unperturbed year: both paths advance under the current rates and the
      // outer ratio contribution is 1.
      m_state = target.advance(m_state, t, cur_blocks[k]);
      q_state = target.advance(q_state, t, cur_blocks[k]);
      if (sel) out.inner_accepted[k] = accept_log(0.0, rng);
      continue;
    }
    active[k] = 1;

    // The four one-year runs of the loop body; independent, so they may fan
    // out across threads.
    PdaState m_prop, m_cur, q_prop, q_cur;
    parallel_for(4, threads, [&](int j) {
      switch (j) {
        case 0: m_prop = target.advance(m_state, t, prop_blocks[k]); break;
        case 1: m_cur = target.advance(m_state, t, cur_blocks[k]); break;
        case 2: q_prop = target.advance(q_state, t, prop_blocks[k]); break;
        default: q_cur = target.advance(q_state, t, cur_blocks[k]); break;
      }
    });

    const double lp_cur = target.log_prior_year(t, cur_blocks[k]);
    const double lp_prop = target.log_prior_year(t, prop_blocks[k]);
    const double s_fwd_prop = lp_prop + target.year_loglik(t, m_prop);
    const double s_fwd_cur = lp_cur + target.year_loglik(t, m_cur);
    delta[k] = s_fwd_prop - s_fwd_cur;
    s_q_prop[k] = lp_prop + target.year_loglik(t, q_prop);
    s_q_cur[k] = lp_cur + target.year_loglik(t, q_cur);

    const double log_alpha = std::min(0.0, delta[k]);
    out.inner_alpha[k] = alpha_from_log(log_alpha);
    const bool acc = accept_log(log_alpha, rng);
    out.inner_accepted[k] = acc;
    if (acc) {
      for (int j = 0; j < R; ++j) composite[static_cast<std::size_t>(k) * R + j] = prop_blocks[k][j];
      changed[k] = 1;
      m_state = m_prop;
    } else {
      m_state = m_cur;
    }
    q_state = q_cur;
  }

  // Final stage: one fresh full-likelihood run at the composite, then the
  // printed outer ratio with the Q-path reverse terms.
  const double ll_comp = target.full_loglik(composite);

  double lp_changed_prop = 0.0, lp_changed_cur = 0.0;
  for (int k = 0; k < T; ++k) {
    if (!changed[k]) continue;
    lp_changed_prop += target.log_prior_year(k + 1, prop_blocks[k]);
    lp_changed_cur += target.log_prior_year(k + 1, cur_blocks[k]);
  }
  const double u_comp = lp_changed_prop + ll_comp;
  const double u_cur = lp_changed_cur + current_full_loglik;
  double outer_log = u_comp - u_cur;

  for (int k = 0; k < T; ++k) {
    if (!active[k]) continue;
    if (changed[k]) {
      outer_log += std::min(0.0, s_q_cur[k] - s_q_prop[k]) - std::min(0.0, delta[k]);
      if (!proposal.symmetric())
        outer_log += proposal.log_density(prop_blocks[k], cur_blocks[k]) -
                     proposal.log_density(cur_blocks[k], prop_blocks[k]);
    } else {
      if (delta[k] >= 0.0)
        throw std::logic_error("pda_step: rejected inner move with acceptance probability 1");
      outer_log += log1mexp(std::min(0.0, s_q_prop[k] - s_q_cur[k])) -
                   log1mexp(std::min(0.0, delta[k]));
    }
  }

  out.outer_alpha = alpha_from_log(outer_log);
  out.accepted = accept_log(outer_log, rng);
  out.point = out.accepted ? composite : current_rates;
  out.full_loglik = out.accepted ? ll_comp : current_full_loglik;
  out.advances = target.advance_count() - advances_before;
  out.model_runs = target.full_run_count() - full_before;
  return out;
}

KernelOutcome calderhead_step(const Point& current,
                              const std::function<double(const Point&)>& log_post, int n_proposals,
                              const BlockProposal& proposal, RandomSource& rng,
                              std::optional<double> current_log_post, int threads) {
  require(n_proposals >= 1, "calderhead_step: need at least one proposal");
  KernelOutcome out;

  const int K = n_proposals;
  out.candidates.resize(K + 1);
  out.candidates[0] = current;
  for (int j = 1; j <= K; ++j) out.candidates[j] = proposal.propose(current, rng);

  std::vector<double> lp(K + 1, 0.0);
  lp[0] = current_log_post ? *current_log_post : log_post(current);
  require(std::isfinite(lp[0]), "calderhead_step: current point has non-finite posterior");
  parallel_for(K, threads, [&](int j) { lp[j + 1] = log_post(out.candidates[j + 1]); });

  // Candidate weights: posterior times the density of generating the other K
  // points from the candidate.
  std::vector<double> lw(K + 1);
  for (int j = 0; j <= K; ++j) {
    double w = lp[j];
    for (int m = 0; m <= K; ++m) {
      if (m == j) continue;
      w += proposal.log_density(out.candidates[j], out.candidates[m]);
    }
    lw[j] = w;
  }
  require(std::isfinite(lw[0]), "calderhead_step: current candidate weight non-finite");

  // Metropolis-type transition matrix on the candidate set (uniform choice
  // among the K others, accepted with the weight ratio), applied K times; the
  // next state is sampled from the current state's row of that K-step
  // composite. K = 1 is plain Metropolis-Hastings.
  std::vector<std::vector<double>> step(K + 1, std::vector<double>(K + 1, 0.0));
  for (int i = 0; i <= K; ++i) {
    double stay = 1.0;
    for (int j = 0; j <= K; ++j) {
      if (j == i) continue;
      const double a = alpha_from_log(std::min(0.0, lw[j] - lw[i])) / K;
      step[i][j] = a;
      stay -= a;
    }
    step[i][i] = stay;
  }
  std::vector<double> row(K + 1, 0.0);
  row[0] = 1.0;
  for (int hop = 0; hop < K; ++hop) {
    std::vector<double> next(K + 1, 0.0);
    for (int i = 0; i <= K; ++i) {
      if (row[i] == 0.0) continue;
      for (int j = 0; j <= K; ++j) next[j] += row[i] * step[i][j];
    }
    row = std::move(next);
  }
  out.move_probs = row;

  const double u = rng.uniform();
  double cum = 0.0;
  int chosen = 0;
  for (int j = 1; j <= K; ++j) {
    cum += out.move_probs[j];
    if (u < cum) {
      chosen = j;
      break;
    }
  }

  out.chosen = chosen;
  out.accepted = chosen != 0;
  out.outer_alpha = 1.0 - out.move_probs[0];
  out.point = out.candidates[chosen];
  out.log_post = lp[chosen];
  return out;
}

VarianceParams gibbs_variance_update(const ChannelResiduals& commercial,
                                     const ChannelResiduals& survey, const PriorSpec& prior,
                                     const VarianceParams& current, RandomSource& rng) {
  const std::size_t n = current.sigma2_c.size();
  require(commercial.ss.size() == n && commercial.n.size() == n, "gibbs: commercial sums shape");
  require(survey.ss.size() == n && survey.n.size() == n, "gibbs: survey sums shape");

  VarianceParams out = current;
  for (std::size_t i = 0; i < n; ++i) {
    if (!current.fixed_c[i]) {
      const double shape = prior.sigma2_c.shape + 0.5 * commercial.n[i];
      const double scale = prior.sigma2_c.scale + 0.5 * commercial.ss[i];
      out.sigma2_c[i] = rng.inverse_gamma(shape, scale);
    }
    const double shape = prior.sigma2_s.shape + 0.5 * survey.n[i];
    const double scale = prior.sigma2_s.scale + 0.5 * survey.ss[i];
    out.sigma2_s[i] = rng.inverse_gamma(shape, scale);
  }
  return out;
}

}  // namespace ssfit
