#include "ssfit/params.hpp"

#include <cmath>
#include <limits>

#include "ssfit/errors.hpp"

namespace ssfit {

namespace {
constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// Regularised lower incomplete gamma P(a, x) by series / continued fraction.
double gamma_p(double a, double x) {
  if (x <= 0.0) return 0.0;
  if (x < a + 1.0) {
    double term = 1.0 / a;
    double sum = term;
    for (int n = 1; n < 500; ++n) {
      term *= x / (a + n);
      sum += term;
      if (std::abs(term) < std::abs(sum) * 1e-15) break;
    }
    return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
  }
  // Lentz continued fraction for Q(a, x).
  const double tiny = 1e-300;
  double b = x + 1.0 - a;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  for (int n = 1; n < 500; ++n) {
    const double an = -n * (n - a);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < 1e-15) break;
  }
  const double q = std::exp(-x + a * std::log(x) - std::lgamma(a)) * h;
  return 1.0 - q;
}
}  // namespace

double UniformPrior::logpdf(double x) const {
  return contains(x) ? -std::log(hi - lo) : kNegInf;
}

double InvGammaPrior::logpdf(double x) const {
  if (!(x > 0.0)) return kNegInf;
  return shape * std::log(scale) - std::lgamma(shape) - (shape + 1.0) * std::log(x) - scale / x;
}

double InvGammaPrior::mean() const {
  require(shape > 1.0, "inverse-gamma mean undefined for shape <= 1");
  return scale / (shape - 1.0);
}

double InvGammaPrior::median() const {
  // X ~ InvGamma(a, b)  =>  P(X <= m) = Q(a, b/m) = 0.5, solve by bisection.
  double lo = 1e-12, hi = 1e12;
  for (int it = 0; it < 200; ++it) {
    const double mid = std::sqrt(lo * hi);
    const double cdf = 1.0 - gamma_p(shape, scale / mid);
    if (cdf < 0.5)
      lo = mid;
    else
      hi = mid;
  }
  return std::sqrt(lo * hi);
}

double PriorSpec::typical_sigma2_c() const {
  return sigma2_c.shape > 1.0 ? sigma2_c.mean() : sigma2_c.median();
}

double PriorSpec::typical_sigma2_s() const {
  return sigma2_s.shape > 1.0 ? sigma2_s.mean() : sigma2_s.median();
}

void VarianceParams::validate() const {
  require(sigma2_c.size() == sigma2_s.size(), "variances: length mismatch");
  require(fixed_c.size() == sigma2_c.size(), "variances: mask length mismatch");
  for (double v : sigma2_c) require(v > 0.0, "variances: sigma2_c must be > 0");
  for (double v : sigma2_s) require(v > 0.0, "variances: sigma2_s must be > 0");
}

StaticParams ParameterVector::static_params() const {
  StaticParams sp;
  sp.kappa = std::exp(ln_kappa);
  sp.rmax.resize(ln_rmax.size());
  for (std::size_t i = 0; i < ln_rmax.size(); ++i) sp.rmax[i] = std::exp(ln_rmax[i]);
  return sp;
}

FishingRates ParameterVector::spinup_rates() const {
  FishingRates out;
  out.phi = phi0;
  return out;
}

double log_prior(const ParameterVector& pv, const PriorSpec& prior) {
  double total = prior.ln_kappa.logpdf(pv.ln_kappa);
  for (double v : pv.ln_rmax) total += prior.ln_rmax.logpdf(v);
  for (double v : pv.phi0) total += prior.phi0.logpdf(v);
  for (double v : pv.phi.v) total += prior.phi.logpdf(v);
  for (int i = 0; i < pv.n_species(); ++i) {
    if (!pv.variances.fixed_c[i]) total += prior.sigma2_c.logpdf(pv.variances.sigma2_c[i]);
    total += prior.sigma2_s.logpdf(pv.variances.sigma2_s[i]);
  }
  return total;
}

}  // namespace ssfit
