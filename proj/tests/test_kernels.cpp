#include <doctest.h>

#include <cmath>
#include <cstring>
#include <numbers>

#include "ssfit/diagnostics.hpp"
#include "ssfit/kernels.hpp"
#include "ssfit/toy_models.hpp"
#include "ssfit/validate.hpp"

using namespace ssfit;

namespace {

double normal_logpdf(double x, double mean, double var) {
  const double r = x - mean;
  return -0.5 * (std::log(2.0 * std::numbers::pi) + std::log(var)) - 0.5 * r * r / var;
}

}  // namespace

TEST_CASE("mh: degenerate proposal always accepts") {
  auto post = [](const Point& p) { return normal_logpdf(p[0], 0.0, 1.0); };
  DegenerateProposal prop;
  RngStream rng(1);
  const Point x{0.7};
  auto out = mh_step(x, post, prop, rng);
  CHECK(out.outer_alpha == 1.0);
  CHECK(out.accepted);
  CHECK(out.point == x);
}

TEST_CASE("mh: proposal outside the prior support is rejected") {
  auto post = [](const Point& p) {
    return p[0] >= 0.0 && p[0] <= 1.0 ? 0.0 : -std::numeric_limits<double>::infinity();
  };
  // force a step that leaves [0, 1]
  GaussianWalk walk({100.0});
  RngStream rng(3);
  int rejected_outside = 0;
  Point x{0.5};
  for (int i = 0; i < 200; ++i) {
    auto out = mh_step(x, post, walk, rng);
    if (out.accepted) {
      CHECK(out.point[0] >= 0.0);
      CHECK(out.point[0] <= 1.0);
    } else {
      ++rejected_outside;
    }
    x = out.point;
  }
  CHECK(rejected_outside > 100);
}

TEST_CASE("mda: when every inner proposal is rejected the outer alpha is exactly 1") {
  // Surrogates differ from the target, so this exercises the unchanged-set
  // product; with theta'' == theta every factor must cancel bit-exactly.
  FunctionMdaTarget target(
      {{0}, {1}}, [](int, const Point&) { return 0.0; },
      [](const Point& p) {
        return std::vector<double>{normal_logpdf(p[0], 0.0, 2.0) + 0.3 * p[1],
                                   normal_logpdf(p[1], 0.0, 0.5) + 0.1 * p[0],
                                   normal_logpdf(p[0], 0.0, 1.0) + normal_logpdf(p[1], 0.0, 1.0)};
      });
  GaussianWalk walk({50.0});  // huge steps: inner moves essentially always rejected
  std::vector<const BlockProposal*> props{&walk, &walk};

  Point x{0.1, -0.2};
  const double ll = target.full_loglik(x);
  RngStream rng(5);
  int seen_all_rejected = 0;
  for (int i = 0; i < 200; ++i) {
    auto out = mda_step(x, target, props, rng, ll, 1);
    if (!out.inner_accepted[0] && !out.inner_accepted[1]) {
      ++seen_all_rejected;
      CHECK(out.outer_alpha == 1.0);
      CHECK(out.accepted);
      CHECK(out.point == x);
    }
  }
  CHECK(seen_all_rejected > 50);
}

TEST_CASE("mda: invalid proposals never enter the composite") {
  FunctionMdaTarget target(
      {{0}}, [](int, const Point& p) {
        return p[0] >= 0.0 && p[0] <= 1.0 ? 0.0 : -std::numeric_limits<double>::infinity();
      },
      [](const Point& p) {
        const double v = p[0] >= 0.0 && p[0] <= 1.0
                             ? 0.0
                             : -std::numeric_limits<double>::infinity();
        return std::vector<double>{v, v};
      });
  GaussianWalk walk({5.0});
  std::vector<const BlockProposal*> props{&walk};
  Point x{0.5};
  RngStream rng(9);
  for (int i = 0; i < 300; ++i) {
    auto out = mda_step(x, target, props, rng, 0.0, 1);
    CHECK(out.point[0] >= 0.0);
    CHECK(out.point[0] <= 1.0);
    x = out.point;
  }
}

TEST_CASE("mda: 2-D Gaussian with exact conditional surrogates recovers the covariance") {
  const double rho = 0.6;
  const double det = 1.0 - rho * rho;
  auto joint = [&](const Point& p) {
    const double q = (p[0] * p[0] - 2.0 * rho * p[0] * p[1] + p[1] * p[1]) / det;
    return -0.5 * q - 0.5 * std::log(det) - std::log(2.0 * std::numbers::pi);
  };
  // exact full conditionals: x_i | x_j ~ N(rho x_j, 1 - rho^2)
  FunctionMdaTarget target(
      {{0}, {1}}, [](int, const Point&) { return 0.0; },
      [&](const Point& p) {
        return std::vector<double>{normal_logpdf(p[0], rho * p[1], det),
                                   normal_logpdf(p[1], rho * p[0], det), joint(p)};
      });
  GaussianWalk walk({1.2});
  std::vector<const BlockProposal*> props{&walk, &walk};

  Point x{0.0, 0.0};
  double ll = target.full_loglik(x);
  RngStream rng(11);
  const int n = 50000;
  double s00 = 0, s01 = 0, s11 = 0, m0 = 0, m1 = 0;
  for (int i = 0; i < n; ++i) {
    auto out = mda_step(x, target, props, rng, ll, 1);
    x = out.point;
    ll = out.full_loglik;
    target.clear_cache();
    m0 += x[0];
    m1 += x[1];
    s00 += x[0] * x[0];
    s01 += x[0] * x[1];
    s11 += x[1] * x[1];
  }
  m0 /= n;
  m1 /= n;
  const double c00 = s00 / n - m0 * m0;
  const double c01 = s01 / n - m0 * m1;
  const double c11 = s11 / n - m1 * m1;
  const double frob_err = std::sqrt((c00 - 1.0) * (c00 - 1.0) + 2.0 * (c01 - rho) * (c01 - rho) +
                                    (c11 - 1.0) * (c11 - 1.0));
  const double frob_truth = std::sqrt(1.0 + 2.0 * rho * rho + 1.0);
  CHECK(frob_err / frob_truth < 0.05);
}

TEST_CASE("mda: run-count accounting with an instrumented stub") {
  // Surrogates depend only on their own set; one underlying evaluation per
  // distinct point, cross evaluations served by the projected cache.
  long stub_calls = 0;
  auto make_target = [&]() {
    return FunctionMdaTarget(
        {{0}, {1}, {2}}, [](int, const Point&) { return 0.0; },
        [&stub_calls](const Point& p) {
          ++stub_calls;
          return std::vector<double>{
              normal_logpdf(p[0], 0.0, 1.0), normal_logpdf(p[1], 0.0, 1.0),
              normal_logpdf(p[2], 0.0, 1.0),
              normal_logpdf(p[0], 0.0, 1.0) + normal_logpdf(p[1], 0.0, 1.0) +
                  normal_logpdf(p[2], 0.0, 1.0)};
        },
        true);
  };
  GaussianWalk walk({0.8});
  std::vector<const BlockProposal*> props{&walk, &walk, &walk};

  RngStream rng(13);
  for (int rep = 0; rep < 50; ++rep) {
    FunctionMdaTarget target = make_target();
    Point x{0.2, -0.1, 0.4};
    const double ll = target.full_loglik(x);  // the "beyond cache" current run
    const long before = target.model_runs();
    auto out = mda_step(x, target, props, rng, ll, 1);
    const long used = target.model_runs() - before;
    CHECK(used >= 3);      // stage 1 evaluates every set
    CHECK(used <= 3 + 2);  // plus at most composite and one fresh evaluation
    CHECK(out.model_runs == used);
  }
}

TEST_CASE("pda: degenerate proposals for every year accept with probability 1") {
  FunctionPdaTarget target(
      4, 1, {0.0},
      [](const FunctionPdaTarget::State& s, int, const std::vector<double>& r) {
        return FunctionPdaTarget::State{0.8 * s[0] + r[0]};
      },
      [](int, const FunctionPdaTarget::State& s) { return normal_logpdf(s[0], 1.0, 0.5); },
      [](int, const std::vector<double>&) { return 0.0; });
  DegenerateProposal prop;
  Point rates{0.1, 0.2, 0.3, 0.4};
  const double ll = target.full_loglik(rates);
  RngStream rng(17);
  auto out = pda_step(rates, target, prop, rng, ll, nullptr, 1);
  CHECK(out.outer_alpha == 1.0);
  CHECK(out.accepted);
  CHECK(out.point == rates);
}

TEST_CASE("pda: trajectory evaluation pattern matches the five-run accounting") {
  const int T = 6;
  FunctionPdaTarget target(
      T, 1, {0.0},
      [](const FunctionPdaTarget::State& s, int, const std::vector<double>& r) {
        return FunctionPdaTarget::State{0.9 * s[0] + r[0]};
      },
      [](int, const FunctionPdaTarget::State& s) { return normal_logpdf(s[0], 0.5, 1.0); },
      [](int, const std::vector<double>& r) { return normal_logpdf(r[0], 0.0, 1.0); });
  GaussianWalk walk({0.4});

  Point rates(T, 0.0);
  double ll = target.full_loglik(rates);
  RngStream rng(19);
  for (int rep = 0; rep < 20; ++rep) {
    const long adv0 = target.advance_count();
    const long full0 = target.full_run_count();
    auto out = pda_step(rates, target, walk, rng, ll, nullptr, 1);
    CHECK(target.advance_count() - adv0 == 4 * T);  // the four per-year runs
    CHECK(target.full_run_count() - full0 == 1);    // one final full evaluation
    rates = out.point;
    ll = out.full_loglik;
  }

  // subset mode: unselected years advance only the two carried paths
  std::vector<char> sel(T, 0);
  sel[1] = sel[4] = 1;
  const long adv0 = target.advance_count();
  auto out = pda_step(rates, target, walk, rng, ll, &sel, 1);
  CHECK(target.advance_count() - adv0 == 2 * T + 2 * 2);
  CHECK(out.inner_alpha[0] == 1.0);  // unselected years contribute ratio 1
}

TEST_CASE("calderhead: K=1 uses the Metropolis-Hastings acceptance") {
  auto post = [](const Point& p) { return normal_logpdf(p[0], 0.0, 1.0); };
  GaussianWalk walk({1.5});
  // script the proposal draw (two uniforms for one normal) plus selection
  for (double z : {0.3, 0.7, 0.9}) {
    ScriptedSource rng({z, 0.25, 0.5});
    Point x{0.4};
    auto out = calderhead_step(x, post, 1, walk, rng, std::nullopt, 1);
    const double y = out.candidates[1][0];
    const double expect = std::min(1.0, std::exp(post({y}) - post({x[0]})));
    CHECK(out.move_probs[1] == doctest::Approx(expect).epsilon(1e-12));
  }
}

TEST_CASE("calderhead: identical candidates keep the chain in place") {
  auto post = [](const Point& p) { return normal_logpdf(p[0], 0.0, 1.0); };
  DegenerateProposal prop;
  RngStream rng(23);
  Point x{0.4};
  auto out = calderhead_step(x, post, 4, prop, rng, std::nullopt, 1);
  CHECK(out.point == x);
}

TEST_CASE("calderhead: all minus-infinity proposals stay put") {
  auto post = [](const Point& p) {
    return std::abs(p[0]) < 0.5 ? 0.0 : -std::numeric_limits<double>::infinity();
  };
  GaussianWalk walk({100.0});  // all proposals land outside the support
  RngStream rng(29);
  Point x{0.0};
  auto out = calderhead_step(x, post, 6, walk, rng, std::nullopt, 1);
  CHECK(out.point == x);
  CHECK(out.move_probs[0] == doctest::Approx(1.0));
}

TEST_CASE("gibbs: no data draws from the prior") {
  PriorSpec prior;
  ChannelResiduals none{{0.0}, {0}};
  VarianceParams var{{1.0}, {1.0}, {0}};
  RngStream rng(31);
  // sigma2_s prior is inverse-gamma(2,2) with mean 2
  double total = 0.0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) total += gibbs_variance_update(none, none, prior, var, rng).sigma2_s[0];
  CHECK(total / n == doctest::Approx(2.0).epsilon(0.02));
}

TEST_CASE("gibbs: frozen entries are returned bitwise") {
  PriorSpec prior;
  ChannelResiduals res{{3.7}, {12}};
  VarianceParams var{{4.0}, {1.0}, {1}};
  RngStream rng(37);
  for (int i = 0; i < 100; ++i) {
    const VarianceParams out = gibbs_variance_update(res, res, prior, var, rng);
    CHECK(out.sigma2_c[0] == 4.0);
    CHECK(std::memcmp(&out.sigma2_c[0], &var.sigma2_c[0], sizeof(double)) == 0);
  }
}

TEST_CASE("validation suite checks pass at reduced scale") {
  CHECK(check_exact_surrogate_mda(2000, 101).passed);
  CHECK(check_exact_surrogate_pda(2000, 102).passed);
  CHECK(check_gibbs_conjugate(30000, 103).passed);
  CHECK(check_mh_gaussian_moments(20000, 104).passed);
}
