#include "ssfit/likelihood.hpp"

#include <cmath>
#include <limits>
#include <numbers>

#include "ssfit/errors.hpp"

namespace ssfit {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
const double kLog2Pi = std::log(2.0 * std::numbers::pi);

// ln N(ln obs | ln model, sigma2); -inf with diagnostics if model <= 0.
inline double log_term(double obs, double model, double sigma2, int t, int sp,
                       LikelihoodDiag* diag) {
  if (!(model > 0.0)) {
    if (diag) {
      diag->infeasible = true;
      diag->year = t;
      diag->species = sp;
    }
    return kNegInf;
  }
  const double r = std::log(obs) - std::log(model);
  return -0.5 * (kLog2Pi + std::log(sigma2)) - 0.5 * r * r / sigma2;
}

void check_shapes(const std::vector<CatchRecord>& catches, const ObservationSet& obs,
                  const VarianceParams& var) {
  require(static_cast<int>(catches.size()) == obs.n_years, "likelihood: catches length != years");
  require(static_cast<int>(var.sigma2_c.size()) == obs.n_species,
          "likelihood: variance length != species");
  for (const auto& c : catches)
    require(static_cast<int>(c.commercial.size()) == obs.n_species &&
                static_cast<int>(c.survey.size()) == obs.n_species,
            "likelihood: catch record width != species");
}

}  // namespace

double log_likelihood_year(int year, const CatchRecord& catches_t, const ObservationSet& obs,
                           const VarianceParams& var, LikelihoodDiag* diag) {
  double total = 0.0;
  for (int sp = 0; sp < obs.n_species; ++sp) {
    if (obs.has_w(year, sp))
      total += log_term(obs.w_at(year, sp), catches_t.commercial[sp], var.sigma2_c[sp], year, sp,
                        diag);
    if (year >= obs.first_survey_year && obs.has_z(year, sp))
      total += log_term(obs.z_at(year, sp), catches_t.survey[sp], var.sigma2_s[sp], year, sp, diag);
  }
  return total;
}

double log_likelihood_species(int species, const std::vector<CatchRecord>& catches,
                              const ObservationSet& obs, const VarianceParams& var,
                              LikelihoodDiag* diag) {
  check_shapes(catches, obs, var);
  double total = 0.0;
  for (int t = 1; t <= obs.n_years; ++t) {
    if (obs.has_w(t, species))
      total += log_term(obs.w_at(t, species), catches[t - 1].commercial[species],
                        var.sigma2_c[species], t, species, diag);
    if (t >= obs.first_survey_year && obs.has_z(t, species))
      total += log_term(obs.z_at(t, species), catches[t - 1].survey[species],
                        var.sigma2_s[species], t, species, diag);
  }
  return total;
}

double log_likelihood_full(const std::vector<CatchRecord>& catches, const ObservationSet& obs,
                           const VarianceParams& var, LikelihoodDiag* diag) {
  check_shapes(catches, obs, var);
  double total = 0.0;
  for (int t = 1; t <= obs.n_years; ++t) total += log_likelihood_year(t, catches[t - 1], obs, var, diag);
  return total;
}

ResidualSums residual_sums(const std::vector<CatchRecord>& catches, const ObservationSet& obs) {
  ResidualSums out;
  out.ss_c.assign(obs.n_species, 0.0);
  out.ss_s.assign(obs.n_species, 0.0);
  out.n_c.assign(obs.n_species, 0);
  out.n_s.assign(obs.n_species, 0);
  for (int t = 1; t <= obs.n_years; ++t) {
    for (int sp = 0; sp < obs.n_species; ++sp) {
      if (obs.has_w(t, sp) && catches[t - 1].commercial[sp] > 0.0) {
        const double r = std::log(obs.w_at(t, sp)) - std::log(catches[t - 1].commercial[sp]);
        out.ss_c[sp] += r * r;
        ++out.n_c[sp];
      }
      if (t >= obs.first_survey_year && obs.has_z(t, sp) && catches[t - 1].survey[sp] > 0.0) {
        const double r = std::log(obs.z_at(t, sp)) - std::log(catches[t - 1].survey[sp]);
        out.ss_s[sp] += r * r;
        ++out.n_s[sp];
      }
    }
  }
  return out;
}

}  // namespace ssfit
