#include <doctest.h>

#include <cmath>
#include <vector>

#include "ssfit/rng.hpp"
#include "ssfit/toy_models.hpp"

using namespace ssfit;

namespace {

// Dense joint-covariance Gaussian conditioning: the brute-force oracle the
// recursive smoother is checked against. phi has the diagonal drive prior;
// y = L phi + offset + noise with L the lower-triangular propagation map.
struct DensePosterior {
  std::vector<double> mean, var;
};

std::vector<std::vector<double>> invert(std::vector<std::vector<double>> a) {
  const int n = static_cast<int>(a.size());
  std::vector<std::vector<double>> inv(n, std::vector<double>(n, 0.0));
  for (int i = 0; i < n; ++i) inv[i][i] = 1.0;
  for (int col = 0; col < n; ++col) {
    int piv = col;
    for (int r = col + 1; r < n; ++r)
      if (std::abs(a[r][col]) > std::abs(a[piv][col])) piv = r;
    std::swap(a[col], a[piv]);
    std::swap(inv[col], inv[piv]);
    const double d = a[col][col];
    for (int j = 0; j < n; ++j) {
      a[col][j] /= d;
      inv[col][j] /= d;
    }
    for (int r = 0; r < n; ++r) {
      if (r == col) continue;
      const double f = a[r][col];
      for (int j = 0; j < n; ++j) {
        a[r][j] -= f * a[col][j];
        inv[r][j] -= f * inv[col][j];
      }
    }
  }
  return inv;
}

DensePosterior dense_conditioning(const LinearGaussianSSM& ssm) {
  const int T = ssm.n_years;
  // x_t = sum_s a^(t-s) phi_s + a^t x0
  std::vector<std::vector<double>> L(T, std::vector<double>(T, 0.0));
  for (int t = 0; t < T; ++t)
    for (int s = 0; s <= t; ++s) L[t][s] = std::pow(ssm.coef_a, t - s);

  std::vector<int> seen;
  for (int t = 1; t <= T; ++t)
    if (ssm.has_obs(t)) seen.push_back(t - 1);
  const int m = static_cast<int>(seen.size());

  // Cov(y) = q L L^T + r I restricted to observed rows; Cov(phi, y) = q L^T
  std::vector<std::vector<double>> cov_y(m, std::vector<double>(m, 0.0));
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j) {
      double v = 0.0;
      for (int s = 0; s < T; ++s) v += L[seen[i]][s] * L[seen[j]][s];
      cov_y[i][j] = ssm.drive_var * v + (i == j ? ssm.obs_var : 0.0);
    }
  const auto cov_y_inv = invert(cov_y);

  std::vector<double> resid(m);
  for (int i = 0; i < m; ++i)
    resid[i] = ssm.observations[seen[i]] - std::pow(ssm.coef_a, seen[i] + 1) * ssm.x0;

  DensePosterior out;
  out.mean.assign(T, 0.0);
  out.var.assign(T, 0.0);
  for (int k = 0; k < T; ++k) {
    std::vector<double> cross(m);  // Cov(phi_k, y_i) = q L[i][k]
    for (int i = 0; i < m; ++i) cross[i] = ssm.drive_var * L[seen[i]][k];
    double mean = 0.0, reduction = 0.0;
    for (int i = 0; i < m; ++i) {
      double w = 0.0;
      for (int j = 0; j < m; ++j) w += cov_y_inv[i][j] * resid[j];
      mean += cross[i] * w;
      double v = 0.0;
      for (int j = 0; j < m; ++j) v += cov_y_inv[i][j] * cross[j];
      reduction += cross[i] * v;
    }
    out.mean[k] = mean;
    out.var[k] = ssm.drive_var - reduction;
  }
  return out;
}

}  // namespace

TEST_CASE("smoother matches dense joint-covariance conditioning") {
  RngStream rng(7);
  for (int rep = 0; rep < 5; ++rep) {
    LinearGaussianSSM ssm;
    ssm.n_years = 5;
    ssm.coef_a = 0.5 + 0.4 * rng.uniform();
    ssm.drive_var = 0.3 + rng.uniform();
    ssm.obs_var = 0.2 + rng.uniform();
    ssm.x0 = rng.normal();
    ssm.observations.resize(5);
    for (auto& y : ssm.observations) y = rng.normal(0.0, 2.0);

    const GaussianPosterior fast = exact_posterior_lg(ssm);
    const DensePosterior dense = dense_conditioning(ssm);
    for (int t = 0; t < 5; ++t) {
      CHECK(fast.mean[t] == doctest::Approx(dense.mean[t]).epsilon(1e-8));
      CHECK(fast.var[t] == doctest::Approx(dense.var[t]).epsilon(1e-8));
    }
  }
}

TEST_CASE("smoother with partial observation masks matches dense conditioning") {
  RngStream rng(13);
  LinearGaussianSSM ssm;
  ssm.n_years = 6;
  ssm.coef_a = 0.8;
  ssm.drive_var = 0.5;
  ssm.obs_var = 0.4;
  ssm.x0 = 0.3;
  ssm.observations.resize(6);
  for (auto& y : ssm.observations) y = rng.normal();
  ssm.observed = {1, 0, 1, 1, 0, 1};

  const GaussianPosterior fast = exact_posterior_lg(ssm);
  const DensePosterior dense = dense_conditioning(ssm);
  for (int t = 0; t < 6; ++t) {
    CHECK(fast.mean[t] == doctest::Approx(dense.mean[t]).epsilon(1e-8));
    CHECK(fast.var[t] == doctest::Approx(dense.var[t]).epsilon(1e-8));
  }
}

TEST_CASE("prior-only smoothing returns the prior") {
  LinearGaussianSSM ssm;
  ssm.n_years = 4;
  ssm.coef_a = 0.9;
  ssm.drive_var = 0.7;
  ssm.obs_var = 0.5;
  ssm.observations.assign(4, 1.0);
  ssm.observed = {0, 0, 0, 0};
  const GaussianPosterior post = exact_posterior_lg(ssm);
  for (int t = 0; t < 4; ++t) {
    CHECK(post.mean[t] == doctest::Approx(0.0).epsilon(1e-14));
    CHECK(post.var[t] == doctest::Approx(0.7).epsilon(1e-12));
  }
}

TEST_CASE("vanishing observation noise pins the states") {
  LinearGaussianSSM ssm;
  ssm.n_years = 5;
  ssm.coef_a = 0.85;
  ssm.drive_var = 1.3;
  ssm.obs_var = 0.0;  // degenerate conditioning
  ssm.x0 = 0.2;
  ssm.observations = {0.5, -0.3, 0.8, 0.1, 0.4};
  const GaussianPosterior post = exact_posterior_lg(ssm);
  double prev = ssm.x0;
  for (int t = 0; t < 5; ++t) {
    const double implied = ssm.observations[t] - ssm.coef_a * prev;
    CHECK(post.mean[t] == doctest::Approx(implied).epsilon(1e-10));
    CHECK(post.var[t] < 1e-10);
    prev = ssm.observations[t];
  }
}

TEST_CASE("ssm likelihood decomposes over years") {
  RngStream rng(5);
  LinearGaussianSSM ssm;
  ssm.n_years = 7;
  ssm.coef_a = 0.7;
  ssm.drive_var = 0.8;
  ssm.obs_var = 0.6;
  ssm.observations.resize(7);
  for (auto& y : ssm.observations) y = rng.normal();

  std::vector<double> phi(7);
  for (auto& p : phi) p = rng.normal();
  const auto x = ssm.states(phi);
  double total = 0.0;
  for (int t = 1; t <= 7; ++t) total += ssm.year_loglik(t, x[t - 1]);
  CHECK(total == doctest::Approx(ssm.loglik(phi)).epsilon(1e-12));
}

TEST_CASE("discrete state indexing round-trips") {
  const std::vector<std::vector<double>> coords{{0, 1, 2}, {5, 9}};
  CHECK(state_count(coords) == 6);
  for (int i = 0; i < 6; ++i) {
    const Point p = state_point(coords, i);
    CHECK(state_index(coords, p) == i);
  }
  CHECK(state_index(coords, {3.0, 5.0}) == -1);
}
