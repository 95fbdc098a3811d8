#include <doctest.h>

#include <cmath>
#include <numbers>

#include "ssfit/likelihood.hpp"
#include "ssfit/rng.hpp"

using namespace ssfit;

namespace {

// A random small instance: catches and observations with mixed masks.
struct Instance {
  ObservationSet obs;
  std::vector<CatchRecord> catches;
  VarianceParams var;
};

Instance random_instance(int years, int species, int first_survey, std::uint64_t seed) {
  Instance inst;
  inst.obs = ObservationSet::empty(years, species, first_survey);
  RngStream rng(seed);
  inst.catches.resize(years);
  for (int t = 1; t <= years; ++t) {
    inst.catches[t - 1].commercial.resize(species);
    inst.catches[t - 1].survey.resize(species);
    for (int sp = 0; sp < species; ++sp) {
      inst.catches[t - 1].commercial[sp] = std::exp(rng.normal(2.0, 1.0));
      inst.catches[t - 1].survey[sp] = std::exp(rng.normal(0.0, 1.0));
      if (rng.uniform() < 0.8)
        inst.obs.set_w(t, sp, std::exp(rng.normal(2.0, 1.0)));
      if (t >= first_survey && rng.uniform() < 0.7)
        inst.obs.set_z(t, sp, std::exp(rng.normal(0.0, 1.0)));
    }
  }
  inst.var.sigma2_c.assign(species, 0.0);
  inst.var.sigma2_s.assign(species, 0.0);
  inst.var.fixed_c.assign(species, 0);
  for (int sp = 0; sp < species; ++sp) {
    inst.var.sigma2_c[sp] = 0.2 + rng.uniform();
    inst.var.sigma2_s[sp] = 0.2 + rng.uniform();
  }
  return inst;
}

}  // namespace

TEST_CASE("zero residual gives the normalising constant") {
  ObservationSet obs = ObservationSet::empty(1, 1, 2);
  obs.set_w(1, 0, 123.0);
  std::vector<CatchRecord> catches(1);
  catches[0].commercial = {123.0};
  catches[0].survey = {0.0};
  VarianceParams var{{0.7}, {1.0}, {0}};
  const double expect = -0.5 * std::log(2.0 * std::numbers::pi * 0.7);
  CHECK(log_likelihood_full(catches, obs, var) == doctest::Approx(expect).epsilon(1e-14));
}

TEST_CASE("one-sigma residual costs one half") {
  ObservationSet obs = ObservationSet::empty(1, 1, 2);
  const double sigma2 = 0.49;
  const double c = 10.0;
  obs.set_w(1, 0, std::exp(std::log(c) + std::sqrt(sigma2)));
  std::vector<CatchRecord> catches(1);
  catches[0].commercial = {c};
  catches[0].survey = {0.0};
  VarianceParams var{{sigma2}, {1.0}, {0}};
  const double expect = -0.5 * std::log(2.0 * std::numbers::pi * sigma2) - 0.5;
  CHECK(log_likelihood_species(0, catches, obs, var) == doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("fully masked data contribute zero") {
  Instance inst = random_instance(4, 3, 2, 11);
  std::fill(inst.obs.w_mask.begin(), inst.obs.w_mask.end(), 0);
  std::fill(inst.obs.z_mask.begin(), inst.obs.z_mask.end(), 0);
  CHECK(log_likelihood_full(inst.catches, inst.obs, inst.var) == 0.0);
  CHECK(log_likelihood_species(1, inst.catches, inst.obs, inst.var) == 0.0);
  CHECK(log_likelihood_year(2, inst.catches[1], inst.obs, inst.var) == 0.0);
}

TEST_CASE("the three factorizations agree") {
  for (std::uint64_t seed : {1u, 2u, 3u, 4u, 5u}) {
    Instance inst = random_instance(8, 4, 3, seed);
    const double full = log_likelihood_full(inst.catches, inst.obs, inst.var);

    double by_species = 0.0;
    for (int sp = 0; sp < 4; ++sp)
      by_species += log_likelihood_species(sp, inst.catches, inst.obs, inst.var);

    double by_year = 0.0;
    for (int t = 1; t <= 8; ++t)
      by_year += log_likelihood_year(t, inst.catches[t - 1], inst.obs, inst.var);

    CHECK(std::abs(full - by_species) < 1e-10);
    CHECK(std::abs(full - by_year) < 1e-10);
  }
}

TEST_CASE("species permutation leaves the full likelihood unchanged") {
  Instance inst = random_instance(6, 4, 2, 42);
  const double base = log_likelihood_full(inst.catches, inst.obs, inst.var);

  const int perm[4] = {2, 0, 3, 1};
  Instance p = inst;
  for (int t = 1; t <= 6; ++t) {
    for (int sp = 0; sp < 4; ++sp) {
      p.catches[t - 1].commercial[sp] = inst.catches[t - 1].commercial[perm[sp]];
      p.catches[t - 1].survey[sp] = inst.catches[t - 1].survey[perm[sp]];
      p.obs.w[p.obs.idx(t, sp)] = inst.obs.w[inst.obs.idx(t, perm[sp])];
      p.obs.z[p.obs.idx(t, sp)] = inst.obs.z[inst.obs.idx(t, perm[sp])];
      p.obs.w_mask[p.obs.idx(t, sp)] = inst.obs.w_mask[inst.obs.idx(t, perm[sp])];
      p.obs.z_mask[p.obs.idx(t, sp)] = inst.obs.z_mask[inst.obs.idx(t, perm[sp])];
    }
  }
  for (int sp = 0; sp < 4; ++sp) {
    p.var.sigma2_c[sp] = inst.var.sigma2_c[perm[sp]];
    p.var.sigma2_s[sp] = inst.var.sigma2_s[perm[sp]];
  }
  CHECK(log_likelihood_full(p.catches, p.obs, p.var) == doctest::Approx(base).epsilon(1e-13));
}

TEST_CASE("larger residuals strictly decrease the likelihood") {
  Instance inst = random_instance(5, 2, 2, 9);
  const double base = log_likelihood_full(inst.catches, inst.obs, inst.var);
  // push one observed entry further from its model value
  for (int t = 1; t <= 5; ++t) {
    if (!inst.obs.has_w(t, 0)) continue;
    Instance worse = inst;
    const double c = inst.catches[t - 1].commercial[0];
    const double w = inst.obs.w_at(t, 0);
    const double r = std::log(w) - std::log(c);
    worse.obs.w[worse.obs.idx(t, 0)] = std::exp(std::log(c) + (r >= 0 ? r + 0.5 : r - 0.5));
    CHECK(log_likelihood_full(worse.catches, worse.obs, worse.var) < base);
    break;
  }
}

TEST_CASE("survey factor applies only from the first survey year") {
  ObservationSet obs = ObservationSet::empty(3, 1, 3);
  obs.set_w(2, 0, 5.0);
  // survey data exist only from year 3; the year-2 factor is commercial only
  obs.set_z(3, 0, 2.0);
  std::vector<CatchRecord> catches(3);
  for (auto& c : catches) {
    c.commercial = {5.0};
    c.survey = {2.0};
  }
  VarianceParams var{{1.0}, {1.0}, {0}};
  const double y2 = log_likelihood_year(2, catches[1], obs, var);
  CHECK(y2 == doctest::Approx(-0.5 * std::log(2.0 * std::numbers::pi)).epsilon(1e-14));
  const double y3 = log_likelihood_year(3, catches[2], obs, var);
  CHECK(y3 == doctest::Approx(-0.5 * std::log(2.0 * std::numbers::pi)).epsilon(1e-14));
}

TEST_CASE("all-zero residuals at a survey year") {
  const int species = 3;
  ObservationSet obs = ObservationSet::empty(2, species, 2);
  std::vector<CatchRecord> catches(2);
  VarianceParams var;
  var.fixed_c.assign(species, 0);
  for (int sp = 0; sp < species; ++sp) {
    var.sigma2_c.push_back(0.3 + sp * 0.2);
    var.sigma2_s.push_back(0.5 + sp * 0.1);
  }
  double expect = 0.0;
  for (int sp = 0; sp < species; ++sp) {
    obs.set_w(2, sp, 7.0 + sp);
    obs.set_z(2, sp, 3.0 + sp);
    catches[1].commercial.push_back(7.0 + sp);
    catches[1].survey.push_back(3.0 + sp);
    expect += -0.5 * std::log(2.0 * std::numbers::pi * var.sigma2_c[sp]) -
              0.5 * std::log(2.0 * std::numbers::pi * var.sigma2_s[sp]);
  }
  catches[0].commercial.assign(species, 1.0);
  catches[0].survey.assign(species, 1.0);
  CHECK(log_likelihood_year(2, catches[1], obs, var) == doctest::Approx(expect).epsilon(1e-13));
}

TEST_CASE("non-positive model catch under an observation is minus infinity with a flag") {
  ObservationSet obs = ObservationSet::empty(1, 2, 2);
  obs.set_w(1, 1, 4.0);
  std::vector<CatchRecord> catches(1);
  catches[0].commercial = {1.0, 0.0};
  catches[0].survey = {0.0, 0.0};
  VarianceParams var{{1.0, 1.0}, {1.0, 1.0}, {0, 0}};
  LikelihoodDiag diag;
  const double ll = log_likelihood_full(catches, obs, var, &diag);
  CHECK(ll == -std::numeric_limits<double>::infinity());
  CHECK(diag.infeasible);
  CHECK(diag.year == 1);
  CHECK(diag.species == 1);
}

TEST_CASE("residual sums feed the variance update") {
  Instance inst = random_instance(6, 2, 2, 5);
  const ResidualSums sums = residual_sums(inst.catches, inst.obs);
  for (int sp = 0; sp < 2; ++sp) {
    double ss = 0.0;
    int n = 0;
    for (int t = 1; t <= 6; ++t) {
      if (inst.obs.has_w(t, sp)) {
        const double r =
            std::log(inst.obs.w_at(t, sp)) - std::log(inst.catches[t - 1].commercial[sp]);
        ss += r * r;
        ++n;
      }
    }
    CHECK(sums.n_c[sp] == n);
    CHECK(sums.ss_c[sp] == doctest::Approx(ss).epsilon(1e-13));
  }
}
