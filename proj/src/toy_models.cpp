#include "ssfit/toy_models.hpp"

#include <atomic>
#include <cmath>
#include <numbers>

#include "ssfit/errors.hpp"

namespace ssfit {

namespace {
const double kLog2Pi = std::log(2.0 * std::numbers::pi);

double normal_logpdf(double x, double mean, double var) {
  const double r = x - mean;
  return -0.5 * (kLog2Pi + std::log(var)) - 0.5 * r * r / var;
}
}  // namespace

FunctionMdaTarget::FunctionMdaTarget(std::vector<std::vector<int>> sets,
                                     std::function<double(int, const Point&)> log_prior_set,
                                     std::function<std::vector<double>(const Point&)> bundle,
                                     bool independent_surrogates)
    : sets_(std::move(sets)), prior_(std::move(log_prior_set)), bundle_(std::move(bundle)),
      independent_(independent_surrogates) {
  projected_.resize(sets_.size());
}

const std::vector<double>& FunctionMdaTarget::evaluate(const Point& point) {
  std::lock_guard<std::mutex> lock(mutex_);
  auto it = memo_.find(point);
  if (it != memo_.end()) return it->second;
  ++runs_;
  auto values = bundle_(point);
  require(values.size() == sets_.size() + 1, "FunctionMdaTarget: bundle size mismatch");
  it = memo_.emplace(point, std::move(values)).first;
  if (independent_) {
    for (std::size_t i = 0; i < sets_.size(); ++i) {
      std::vector<double> key;
      for (int c : sets_[i]) key.push_back(point[c]);
      projected_[i].emplace(std::move(key), it->second[i]);
    }
  }
  return it->second;
}

double FunctionMdaTarget::surrogate(int i, const Point& point) {
  if (independent_) {
    std::vector<double> key;
    for (int c : sets_[i]) key.push_back(point[c]);
    {
      std::lock_guard<std::mutex> lock(mutex_);
      auto it = projected_[i].find(key);
      if (it != projected_[i].end()) return it->second;
    }
  }
  return evaluate(point)[i];
}

double FunctionMdaTarget::full_loglik(const Point& point) { return evaluate(point).back(); }

void FunctionMdaTarget::clear_cache() {
  std::lock_guard<std::mutex> lock(mutex_);
  memo_.clear();
  for (auto& p : projected_) p.clear();
}

FunctionPdaTarget::FunctionPdaTarget(
    int years, int rates_per_year, State initial,
    std::function<State(const State&, int, const std::vector<double>&)> advance,
    std::function<double(int, const State&)> year_loglik,
    std::function<double(int, const std::vector<double>&)> log_prior_year)
    : years_(years), rates_per_year_(rates_per_year), initial_(std::move(initial)),
      advance_(std::move(advance)), year_loglik_(std::move(year_loglik)),
      prior_(std::move(log_prior_year)) {}

PdaState FunctionPdaTarget::initial_state() {
  return std::make_shared<State>(initial_);
}

PdaState FunctionPdaTarget::advance(const PdaState& state, int year,
                                    const std::vector<double>& rates) {
  ++advances_;
  const auto& s = *static_cast<const State*>(state.get());
  return std::make_shared<State>(advance_(s, year, rates));
}

double FunctionPdaTarget::year_loglik(int year, const PdaState& state) {
  return year_loglik_(year, *static_cast<const State*>(state.get()));
}

double FunctionPdaTarget::log_prior_year(int year, const std::vector<double>& rates) const {
  return prior_(year, rates);
}

double FunctionPdaTarget::full_loglik(const Point& rates) {
  ++full_runs_;
  State s = initial_;
  double total = 0.0;
  for (int t = 1; t <= years_; ++t) {
    const std::vector<double> block(rates.begin() + static_cast<std::size_t>(t - 1) * rates_per_year_,
                                    rates.begin() + static_cast<std::size_t>(t) * rates_per_year_);
    s = advance_(s, t, block);
    total += year_loglik_(t, s);
  }
  return total;
}

// ---------------------------------------------------------------------------

std::vector<double> LinearGaussianSSM::states(const std::vector<double>& phi) const {
  std::vector<double> x(n_years);
  double prev = x0;
  for (int t = 1; t <= n_years; ++t) {
    prev = coef_a * prev + phi[t - 1];
    x[t - 1] = prev;
  }
  return x;
}

double LinearGaussianSSM::log_prior_phi(const std::vector<double>& phi) const {
  double total = 0.0;
  for (double p : phi) total += normal_logpdf(p, 0.0, drive_var);
  return total;
}

double LinearGaussianSSM::year_loglik(int t, double x_t) const {
  if (!has_obs(t)) return 0.0;
  return normal_logpdf(observations[t - 1], x_t, obs_var);
}

double LinearGaussianSSM::loglik(const std::vector<double>& phi) const {
  const auto x = states(phi);
  double total = 0.0;
  for (int t = 1; t <= n_years; ++t) total += year_loglik(t, x[t - 1]);
  return total;
}

GaussianPosterior exact_posterior_lg(const LinearGaussianSSM& ssm) {
  const int T = ssm.n_years;
  require(T >= 1, "exact_posterior_lg: empty model");
  require(ssm.drive_var > 0.0 && ssm.obs_var >= 0.0, "exact_posterior_lg: bad variances");

  // Kalman filter over x_t with process noise = the phi prior.
  std::vector<double> m_filt(T + 1), p_filt(T + 1), m_pred(T + 1), p_pred(T + 1);
  m_filt[0] = ssm.x0;
  p_filt[0] = 0.0;
  for (int t = 1; t <= T; ++t) {
    m_pred[t] = ssm.coef_a * m_filt[t - 1];
    p_pred[t] = ssm.coef_a * ssm.coef_a * p_filt[t - 1] + ssm.drive_var;
    if (ssm.has_obs(t)) {
      const double gain = p_pred[t] / (p_pred[t] + ssm.obs_var);
      m_filt[t] = m_pred[t] + gain * (ssm.observations[t - 1] - m_pred[t]);
      p_filt[t] = (1.0 - gain) * p_pred[t];
    } else {
      m_filt[t] = m_pred[t];
      p_filt[t] = p_pred[t];
    }
  }

  // Rauch-Tung-Striebel smoother with lag-one covariances.
  std::vector<double> m_sm(T + 1), p_sm(T + 1), gain(T + 1, 0.0);
  m_sm[T] = m_filt[T];
  p_sm[T] = p_filt[T];
  for (int t = T - 1; t >= 0; --t) {
    gain[t] = p_pred[t + 1] > 0.0 ? p_filt[t] * ssm.coef_a / p_pred[t + 1] : 0.0;
    m_sm[t] = m_filt[t] + gain[t] * (m_sm[t + 1] - m_pred[t + 1]);
    p_sm[t] = p_filt[t] + gain[t] * gain[t] * (p_sm[t + 1] - p_pred[t + 1]);
  }

  // phi_t = x_t - a x_{t-1}: smoothed mean and variance from the joint of
  // (x_{t-1}, x_t), whose covariance is gain[t-1] * p_sm[t].
  GaussianPosterior out;
  out.mean.resize(T);
  out.var.resize(T);
  for (int t = 1; t <= T; ++t) {
    const double cross = gain[t - 1] * p_sm[t];
    out.mean[t - 1] = m_sm[t] - ssm.coef_a * m_sm[t - 1];
    out.var[t - 1] =
        p_sm[t] + ssm.coef_a * ssm.coef_a * p_sm[t - 1] - 2.0 * ssm.coef_a * cross;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Discrete enumeration. The kernels consume one uniform per decision slot in
// a documented order, so scripting those slots walks every branch; the
// recorded acceptance probabilities then weight each branch exactly.

namespace {

constexpr double kForceAccept = 1e-300;  // log u << any finite log alpha

// Uniform that makes uniform_int(n) return exactly `pick`.
double pick_uniform(int pick, int n) { return (pick + 0.5) / n; }

int checked_index(const std::vector<std::vector<double>>& coords, const Point& p) {
  const int idx = state_index(coords, p);
  require(idx >= 0, "enumeration: kernel produced a point outside the discrete space");
  return idx;
}

}  // namespace

int state_count(const std::vector<std::vector<double>>& coords) {
  int n = 1;
  for (const auto& c : coords) n *= static_cast<int>(c.size());
  return n;
}

Point state_point(const std::vector<std::vector<double>>& coords, int index) {
  Point p(coords.size());
  for (std::size_t c = 0; c < coords.size(); ++c) {
    const int n = static_cast<int>(coords[c].size());
    p[c] = coords[c][index % n];
    index /= n;
  }
  return p;
}

int state_index(const std::vector<std::vector<double>>& coords, const Point& point) {
  int index = 0;
  int stride = 1;
  for (std::size_t c = 0; c < coords.size(); ++c) {
    int pos = -1;
    for (std::size_t v = 0; v < coords[c].size(); ++v)
      if (coords[c][v] == point[c]) pos = static_cast<int>(v);
    if (pos < 0) return -1;
    index += stride * pos;
    stride *= static_cast<int>(coords[c].size());
  }
  return index;
}

Matrix enumerate_mh_kernel(const DiscreteMhSpec& spec) {
  const int n = state_count(spec.coords);
  Matrix trans(n, std::vector<double>(n, 0.0));
  FiniteUniformProposal proposal(spec.coords);

  for (int s = 0; s < n; ++s) {
    const Point from = state_point(spec.coords, s);
    double combo_prob = 1.0;
    for (const auto& c : spec.coords) combo_prob /= static_cast<double>(c.size());

    // every joint proposal combination
    std::vector<int> picks(spec.coords.size(), 0);
    for (;;) {
      std::vector<double> draws;
      for (std::size_t c = 0; c < picks.size(); ++c)
        draws.push_back(pick_uniform(picks[c], static_cast<int>(spec.coords[c].size())));
      draws.push_back(kForceAccept);  // acceptance slot; probability read back
      ScriptedSource rng(draws);
      auto outcome = mh_step(from, spec.log_target, proposal, rng);
      const double a = outcome.outer_alpha;
      trans[s][checked_index(spec.coords, outcome.point)] += combo_prob * a;
      trans[s][s] += combo_prob * (1.0 - a);

      std::size_t c = 0;
      while (c < picks.size() && ++picks[c] == static_cast<int>(spec.coords[c].size())) {
        picks[c] = 0;
        ++c;
      }
      if (c == picks.size()) break;
    }
  }
  return trans;
}

Matrix enumerate_calderhead_kernel(const DiscreteMhSpec& spec, int n_proposals) {
  const int n = state_count(spec.coords);
  require(spec.coords.size() == 1, "enumerate_calderhead_kernel: single coordinate expected");
  const int support = static_cast<int>(spec.coords[0].size());
  Matrix trans(n, std::vector<double>(n, 0.0));
  FiniteUniformProposal proposal(spec.coords);

  for (int s = 0; s < n; ++s) {
    const Point from = state_point(spec.coords, s);
    std::vector<int> picks(n_proposals, 0);
    const double combo_prob = std::pow(static_cast<double>(support), -n_proposals);
    for (;;) {
      std::vector<double> draws;
      for (int j = 0; j < n_proposals; ++j) draws.push_back(pick_uniform(picks[j], support));
      draws.push_back(0.5);  // selection slot; the full row is read back instead
      ScriptedSource rng(draws);
      auto outcome =
          calderhead_step(from, spec.log_target, n_proposals, proposal, rng, std::nullopt, 1);
      for (int j = 0; j < static_cast<int>(outcome.candidates.size()); ++j)
        trans[s][checked_index(spec.coords, outcome.candidates[j])] += combo_prob * outcome.move_probs[j];

      int c = 0;
      while (c < n_proposals && ++picks[c] == support) {
        picks[c] = 0;
        ++c;
      }
      if (c == n_proposals) break;
    }
  }
  return trans;
}

Matrix enumerate_mda_kernel(const DiscreteMdaSpec& spec) {
  const int n = state_count(spec.coords);
  const int n_sets = static_cast<int>(spec.sets.size());
  Matrix trans(n, std::vector<double>(n, 0.0));

  // Proposals act on whole sets; support = per-coordinate values of that set.
  std::vector<FiniteUniformProposal> proposals;
  std::vector<const BlockProposal*> proposal_ptrs;
  proposals.reserve(n_sets);
  for (int i = 0; i < n_sets; ++i) {
    std::vector<std::vector<double>> sup;
    for (int c : spec.sets[i]) sup.push_back(spec.coords[c]);
    proposals.emplace_back(sup);
  }
  for (auto& p : proposals) proposal_ptrs.push_back(&p);

  auto target_factory = [&]() {
    return FunctionMdaTarget(
        spec.sets, [](int, const Point&) { return 0.0; },
        [&spec](const Point& p) {
          std::vector<double> out;
          for (const auto& l : spec.log_surrogates) out.push_back(l(p));
          out.push_back(spec.log_target(p));
          return out;
        });
  };

  // Proposal combinations run over the joint support of all sets' coordinates.
  std::vector<int> set_coords;
  for (const auto& s : spec.sets)
    for (int c : s) set_coords.push_back(c);

  for (int s = 0; s < n; ++s) {
    const Point from = state_point(spec.coords, s);
    std::vector<int> picks(set_coords.size(), 0);
    double combo_prob = 1.0;
    for (int c : set_coords) combo_prob /= static_cast<double>(spec.coords[c].size());

    for (;;) {
      for (int pattern = 0; pattern < (1 << n_sets); ++pattern) {
        std::vector<double> draws;
        for (std::size_t j = 0; j < set_coords.size(); ++j)
          draws.push_back(pick_uniform(picks[j], static_cast<int>(spec.coords[set_coords[j]].size())));
        for (int i = 0; i < n_sets; ++i)
          draws.push_back((pattern >> i) & 1 ? kForceAccept : 1.0 - 1e-12);
        draws.push_back(kForceAccept);  // outer slot; probability read back

        FunctionMdaTarget target = target_factory();
        ScriptedSource rng(draws);
        const double cur_full = spec.log_target(from);
        auto outcome = mda_step(from, target, proposal_ptrs, rng, cur_full, 1);

        double branch = combo_prob;
        for (int i = 0; i < n_sets; ++i) {
          const double a = outcome.inner_alpha[i];
          branch *= (pattern >> i) & 1 ? a : 1.0 - a;
        }
        if (branch == 0.0) continue;
        // Forced-reject slots cannot override alpha == 1; skip the shadowed
        // branch (its probability is 0 anyway by the factor above).
        bool consistent = true;
        for (int i = 0; i < n_sets; ++i)
          if ((outcome.inner_accepted[i] != 0) != (((pattern >> i) & 1) != 0)) consistent = false;
        if (!consistent) continue;

        const double a_outer = outcome.outer_alpha;
        trans[s][checked_index(spec.coords, outcome.point)] += branch * a_outer;
        trans[s][s] += branch * (1.0 - a_outer);
      }

      std::size_t c = 0;
      while (c < picks.size() &&
             ++picks[c] == static_cast<int>(spec.coords[set_coords[c]].size())) {
        picks[c] = 0;
        ++c;
      }
      if (c == picks.size()) break;
    }
  }
  return trans;
}

Matrix enumerate_pda_kernel(const DiscretePdaSpec& spec) {
  const int T = static_cast<int>(spec.coords.size());
  const int n = state_count(spec.coords);
  Matrix trans(n, std::vector<double>(n, 0.0));

  // One proposal shared across years, so all years must offer the same values.
  for (const auto& c : spec.coords)
    require(c == spec.coords[0], "enumerate_pda_kernel: years must share support");
  FiniteUniformProposal proposal({spec.coords[0]});

  for (int s = 0; s < n; ++s) {
    const Point from = state_point(spec.coords, s);
    std::vector<int> picks(T, 0);
    double combo_prob = 1.0;
    for (const auto& c : spec.coords) combo_prob /= static_cast<double>(c.size());

    for (;;) {
      for (int pattern = 0; pattern < (1 << T); ++pattern) {
        std::vector<double> draws;
        for (int t = 0; t < T; ++t) {
          draws.push_back(pick_uniform(picks[t], static_cast<int>(spec.coords[t].size())));
          draws.push_back((pattern >> t) & 1 ? kForceAccept : 1.0 - 1e-12);
        }
        draws.push_back(kForceAccept);

        FunctionPdaTarget target(
            T, 1, {},
            [](const FunctionPdaTarget::State& st, int, const std::vector<double>& r) {
              auto next = st;
              next.push_back(r[0]);
              return next;
            },
            [&spec](int t, const FunctionPdaTarget::State& st) { return spec.log_k(t, st); },
            [](int, const std::vector<double>&) { return 0.0; });
        // fold log_target - sum(log_k) into nothing: full likelihood comes off
        // the same prefix evaluation, so build it from spec.log_target
        struct FullOverride final : PdaTarget {
          FunctionPdaTarget* base;
          const DiscretePdaSpec* spec;
          long fulls = 0;
          int n_years() const override { return base->n_years(); }
          int rates_per_year() const override { return 1; }
          PdaState initial_state() override { return base->initial_state(); }
          PdaState advance(const PdaState& st, int year, const std::vector<double>& r) override {
            return base->advance(st, year, r);
          }
          double year_loglik(int year, const PdaState& st) override {
            return base->year_loglik(year, st);
          }
          double log_prior_year(int year, const std::vector<double>& r) const override {
            return base->log_prior_year(year, r);
          }
          double full_loglik(const Point& rates) override {
            ++fulls;
            return spec->log_target(rates);
          }
          long advance_count() const override { return base->advance_count(); }
          long full_run_count() const override { return fulls; }
        };
        FullOverride wrapped;
        wrapped.base = &target;
        wrapped.spec = &spec;

        ScriptedSource rng(draws);
        const double cur_full = spec.log_target(from);
        auto outcome = pda_step(from, wrapped, proposal, rng, cur_full, nullptr, 1);

        double branch = combo_prob;
        for (int t = 0; t < T; ++t) {
          const double a = outcome.inner_alpha[t];
          branch *= (pattern >> t) & 1 ? a : 1.0 - a;
        }
        if (branch == 0.0) continue;
        bool consistent = true;
        for (int t = 0; t < T; ++t)
          if ((outcome.inner_accepted[t] != 0) != (((pattern >> t) & 1) != 0)) consistent = false;
        if (!consistent) continue;

        const double a_outer = outcome.outer_alpha;
        trans[s][checked_index(spec.coords, outcome.point)] += branch * a_outer;
        trans[s][s] += branch * (1.0 - a_outer);
      }

      int c = 0;
      while (c < T && ++picks[c] == static_cast<int>(spec.coords[c].size())) {
        picks[c] = 0;
        ++c;
      }
      if (c == T) break;
    }
  }
  return trans;
}

Matrix enumerate_conditional_kernel(const std::vector<std::vector<double>>& coords, int coordinate,
                                    const std::function<double(const Point&)>& log_target) {
  const int n = state_count(coords);
  Matrix trans(n, std::vector<double>(n, 0.0));
  for (int s = 0; s < n; ++s) {
    const Point from = state_point(coords, s);
    double norm = 0.0;
    std::vector<double> weights(coords[coordinate].size());
    for (std::size_t v = 0; v < coords[coordinate].size(); ++v) {
      Point p = from;
      p[coordinate] = coords[coordinate][v];
      weights[v] = std::exp(log_target(p));
      norm += weights[v];
    }
    for (std::size_t v = 0; v < coords[coordinate].size(); ++v) {
      Point p = from;
      p[coordinate] = coords[coordinate][v];
      trans[s][state_index(coords, p)] += weights[v] / norm;
    }
  }
  return trans;
}

Matrix matmul(const Matrix& a, const Matrix& b) {
  const std::size_t n = a.size();
  const std::size_t m = b[0].size();
  const std::size_t k = b.size();
  Matrix out(n, std::vector<double>(m, 0.0));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t l = 0; l < k; ++l) {
      const double v = a[i][l];
      if (v == 0.0) continue;
      for (std::size_t j = 0; j < m; ++j) out[i][j] += v * b[l][j];
    }
  return out;
}

std::vector<double> stationary_distribution(const Matrix& transition) {
  // Solve pi (T - I) = 0 with sum(pi) = 1: Gaussian elimination on the
  // transposed system with the last equation replaced by the normalisation.
  const int n = static_cast<int>(transition.size());
  Matrix a(n, std::vector<double>(n + 1, 0.0));
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) a[i][j] = transition[j][i] - (i == j ? 1.0 : 0.0);
  for (int j = 0; j < n; ++j) a[n - 1][j] = 1.0;
  a[n - 1][n] = 1.0;

  for (int col = 0; col < n; ++col) {
    int pivot = col;
    for (int r = col + 1; r < n; ++r)
      if (std::abs(a[r][col]) > std::abs(a[pivot][col])) pivot = r;
    std::swap(a[col], a[pivot]);
    require(std::abs(a[col][col]) > 1e-14, "stationary_distribution: singular system");
    for (int r = 0; r < n; ++r) {
      if (r == col) continue;
      const double f = a[r][col] / a[col][col];
      for (int j = col; j <= n; ++j) a[r][j] -= f * a[col][j];
    }
  }
  std::vector<double> pi(n);
  for (int i = 0; i < n; ++i) pi[i] = a[i][n] / a[i][i];
  return pi;
}

}  // namespace ssfit
