#pragma once

#include <atomic>
#include <functional>
#include <map>
#include <mutex>
#include <vector>

#include "ssfit/kernels.hpp"

namespace ssfit {

// MdaTarget over plain functions, for toys, stubs, and discrete validation
// targets. One "model run" evaluates every surrogate and the full likelihood
// at a point; results are memoized per point and runs counted, mirroring how
// the simulator-backed target works.
class FunctionMdaTarget final : public MdaTarget {
public:
  // bundle(point) returns {l_1 .. l_N, full}. With independent_surrogates,
  // l_i is declared to depend only on set i's values: surrogate lookups are
  // then keyed by that projection, so the cross-point evaluations of the
  // stage-2 correction hit the cache and a step costs at most N + 2 runs.
  FunctionMdaTarget(std::vector<std::vector<int>> sets,
                    std::function<double(int, const Point&)> log_prior_set,
                    std::function<std::vector<double>(const Point&)> bundle,
                    bool independent_surrogates = false);

  int n_sets() const override { return static_cast<int>(sets_.size()); }
  const std::vector<int>& set_indices(int i) const override { return sets_[i]; }
  double log_prior_set(int i, const Point& point) const override { return prior_(i, point); }
  double surrogate(int i, const Point& point) override;
  double full_loglik(const Point& point) override;
  long model_runs() const override { return runs_; }
  void clear_cache();

private:
  const std::vector<double>& evaluate(const Point& point);
  std::vector<std::vector<int>> sets_;
  std::function<double(int, const Point&)> prior_;
  std::function<std::vector<double>(const Point&)> bundle_;
  bool independent_;
  std::map<Point, std::vector<double>> memo_;
  std::vector<std::map<std::vector<double>, double>> projected_;  // per set
  long runs_ = 0;
  std::mutex mutex_;
};

// PdaTarget over plain functions; the year state is an arbitrary vector.
// advance() calls are counted; full_loglik runs its own trajectory and counts
// as one full run (it does not touch the advance counter).
class FunctionPdaTarget final : public PdaTarget {
public:
  using State = std::vector<double>;
  FunctionPdaTarget(int years, int rates_per_year, State initial,
                    std::function<State(const State&, int, const std::vector<double>&)> advance,
                    std::function<double(int, const State&)> year_loglik,
                    std::function<double(int, const std::vector<double>&)> log_prior_year);

  int n_years() const override { return years_; }
  int rates_per_year() const override { return rates_per_year_; }
  PdaState initial_state() override;
  PdaState advance(const PdaState& state, int year, const std::vector<double>& rates) override;
  double year_loglik(int year, const PdaState& state) override;
  double log_prior_year(int year, const std::vector<double>& rates) const override;
  double full_loglik(const Point& rates) override;
  long advance_count() const override { return advances_; }
  long full_run_count() const override { return full_runs_; }

private:
  int years_, rates_per_year_;
  State initial_;
  std::function<State(const State&, int, const std::vector<double>&)> advance_;
  std::function<double(int, const State&)> year_loglik_;
  std::function<double(int, const std::vector<double>&)> prior_;
  std::atomic<long> advances_{0};
  long full_runs_ = 0;
};

// ---------------------------------------------------------------------------
// Linear-Gaussian state-space toy with a closed-form posterior.
//
//   x_t = coef_a * x_{t-1} + phi_t,   phi_t ~ N(0, drive_var) a priori,
//   y_t ~ N(x_t, obs_var).
//
// The dynamic parameters phi play the role the fishing rates play in the real
// model; their joint posterior given y is Gaussian.
struct LinearGaussianSSM {
  int n_years = 0;
  double coef_a = 1.0;
  double drive_var = 1.0;
  double obs_var = 1.0;
  double x0 = 0.0;
  std::vector<double> observations;     // y_1..y_T
  std::vector<char> observed;           // mask; empty = all observed

  bool has_obs(int t) const {
    return observed.empty() ? true : observed[t - 1] != 0;
  }
  std::vector<double> states(const std::vector<double>& phi) const;
  double log_prior_phi(const std::vector<double>& phi) const;
  double year_loglik(int t, double x_t) const;          // log N(y_t | x_t, obs_var)
  double loglik(const std::vector<double>& phi) const;  // sum over observed years
};

struct GaussianPosterior {
  std::vector<double> mean;
  std::vector<double> var;  // marginal variances
};

// Exact per-year posterior of phi via Kalman filtering and Rauch-Tung-Striebel
// smoothing with lag-one covariances (the disturbance smoother).
GaussianPosterior exact_posterior_lg(const LinearGaussianSSM& ssm);

// ---------------------------------------------------------------------------
// Discrete validation targets: every kernel branch is enumerable, so the
// transition matrix can be computed exactly by scripting the kernels' draws.
// Coordinates take the listed values; proposals are uniform over each
// coordinate's values; priors are flat (fold any prior into the target).

using Matrix = std::vector<std::vector<double>>;

int state_count(const std::vector<std::vector<double>>& coords);
Point state_point(const std::vector<std::vector<double>>& coords, int index);
int state_index(const std::vector<std::vector<double>>& coords, const Point& point);

struct DiscreteMhSpec {
  std::vector<std::vector<double>> coords;
  std::function<double(const Point&)> log_target;
};
Matrix enumerate_mh_kernel(const DiscreteMhSpec& spec);
Matrix enumerate_calderhead_kernel(const DiscreteMhSpec& spec, int n_proposals);

struct DiscreteMdaSpec {
  std::vector<std::vector<double>> coords;
  std::vector<std::vector<int>> sets;  // updatable coordinate sets
  std::function<double(const Point&)> log_target;
  std::vector<std::function<double(const Point&)>> log_surrogates;  // one per set
};
Matrix enumerate_mda_kernel(const DiscreteMdaSpec& spec);

struct DiscretePdaSpec {
  std::vector<std::vector<double>> coords;  // one coordinate per year
  // log k_t evaluated on the prefix (coordinates of years 1..t).
  std::function<double(int, const std::vector<double>&)> log_k;
  std::function<double(const Point&)> log_target;
};
Matrix enumerate_pda_kernel(const DiscretePdaSpec& spec);

// Exact conditional redraw of one coordinate given the others (the discrete
// stand-in for the Gibbs variance step).
Matrix enumerate_conditional_kernel(const std::vector<std::vector<double>>& coords, int coordinate,
                                    const std::function<double(const Point&)>& log_target);

Matrix matmul(const Matrix& a, const Matrix& b);

// Stationary distribution of a row-stochastic matrix by linear solve.
std::vector<double> stationary_distribution(const Matrix& transition);

}  // namespace ssfit
