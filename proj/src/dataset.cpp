#include "ssfit/dataset.hpp"

#include <cmath>

#include "ssfit/errors.hpp"
#include "ssfit/rng.hpp"

namespace ssfit {

SimulationRun simulate_point(const ModelBundle& bundle, const ParameterVector& pv) {
  SimulationRun out;
  out.spinup = bundle.model->spin_up(pv.spinup_rates(), pv.static_params(), bundle.spinup_years,
                                     bundle.spinup_early_exit ? bundle.spinup_tol : -1.0);
  out.trajectory = bundle.model->run_trajectory(out.spinup.state, pv.phi, pv.static_params());
  return out;
}

ObservationSet generate_synthetic(const ModelBundle& bundle, const ParameterVector& truth,
                                  std::uint64_t seed) {
  const auto run = simulate_point(bundle, truth);
  ObservationSet obs =
      ObservationSet::empty(bundle.n_years, bundle.n_species(), bundle.first_survey_year);

  RngStream rng(seed, {0x9e0bu});
  for (int t = 1; t <= bundle.n_years; ++t) {
    const CatchRecord& c = run.trajectory.catches[t - 1];
    for (int sp = 0; sp < bundle.n_species(); ++sp) {
      if (!bundle.w_masked[sp] && c.commercial[sp] > 0.0) {
        const double s2 = truth.variances.sigma2_c[sp];
        // variance 0 is the noise-free limit: catches pass through untouched
        obs.set_w(t, sp, s2 > 0.0
                             ? std::exp(std::log(c.commercial[sp]) +
                                        std::sqrt(s2) * rng.normal())
                             : c.commercial[sp]);
      }
      if (t >= bundle.first_survey_year && c.survey[sp] > 0.0) {
        const double s2 = truth.variances.sigma2_s[sp];
        obs.set_z(t, sp, s2 > 0.0 ? std::exp(std::log(c.survey[sp]) +
                                             std::sqrt(s2) * rng.normal())
                                  : c.survey[sp]);
      }
    }
  }
  obs.validate();
  return obs;
}

ParameterVector truth_from_config(const Config& cfg, const ModelBundle& bundle) {
  const int n = bundle.n_species();
  ParameterVector pv;
  pv.ln_kappa = cfg.get_real("truth.ln_kappa");
  pv.ln_rmax = cfg.get_reals("truth.ln_rmax");
  pv.phi0 = cfg.get_reals("truth.phi0");
  require(static_cast<int>(pv.ln_rmax.size()) == n, "truth.ln_rmax: wrong length");
  require(static_cast<int>(pv.phi0.size()) == n, "truth.phi0: wrong length");

  pv.phi = PhiMatrix(bundle.n_years, n);
  for (int t = 1; t <= bundle.n_years; ++t) {
    const auto row = cfg.get_reals("truth.phi_year_" + std::to_string(t));
    require(static_cast<int>(row.size()) == n,
            "truth.phi_year_" + std::to_string(t) + ": wrong length");
    for (int sp = 0; sp < n; ++sp) pv.phi.at(t, sp) = row[sp];
  }

  pv.variances.sigma2_c = cfg.get_reals("truth.sigma2_c");
  pv.variances.sigma2_s = cfg.get_reals("truth.sigma2_s");
  require(static_cast<int>(pv.variances.sigma2_c.size()) == n, "truth.sigma2_c: wrong length");
  require(static_cast<int>(pv.variances.sigma2_s.size()) == n, "truth.sigma2_s: wrong length");
  pv.variances.fixed_c = bundle.fixed_sigma2_c;
  for (int i = 0; i < n; ++i)
    if (bundle.fixed_sigma2_c[i]) pv.variances.sigma2_c[i] = bundle.fixed_sigma2_c_value[i];
  return pv;
}

}  // namespace ssfit
