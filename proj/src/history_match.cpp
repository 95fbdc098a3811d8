#include "ssfit/history_match.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "ssfit/errors.hpp"
#include "ssfit/parallel.hpp"
#include "ssfit/rng.hpp"

namespace ssfit {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Axis-aligned box over the sampled dimensions (everything but variances).
struct Box {
  double kappa_lo, kappa_hi;
  std::vector<double> rmax_lo, rmax_hi, phi0_lo, phi0_hi;
  std::vector<double> phi_lo, phi_hi;  // year-major
};

Box prior_box(const PriorSpec& prior, int n_species, int n_years) {
  Box b;
  b.kappa_lo = prior.ln_kappa.lo;
  b.kappa_hi = prior.ln_kappa.hi;
  b.rmax_lo.assign(n_species, prior.ln_rmax.lo);
  b.rmax_hi.assign(n_species, prior.ln_rmax.hi);
  b.phi0_lo.assign(n_species, prior.phi0.lo);
  b.phi0_hi.assign(n_species, prior.phi0.hi);
  b.phi_lo.assign(static_cast<std::size_t>(n_years) * n_species, prior.phi.lo);
  b.phi_hi.assign(static_cast<std::size_t>(n_years) * n_species, prior.phi.hi);
  return b;
}

Box survivor_box(const std::vector<HistoryMatchPoint>& pts, const Box& fallback) {
  if (pts.empty()) return fallback;
  Box b = fallback;
  auto minmax = [&](auto get, double& lo, double& hi) {
    lo = kInf;
    hi = -kInf;
    for (const auto& p : pts) {
      lo = std::min(lo, get(p.pv));
      hi = std::max(hi, get(p.pv));
    }
    if (lo == hi) {  // keep a sliver of volume around a single survivor
      lo -= 1e-6;
      hi += 1e-6;
    }
  };
  minmax([](const ParameterVector& pv) { return pv.ln_kappa; }, b.kappa_lo, b.kappa_hi);
  for (std::size_t i = 0; i < b.rmax_lo.size(); ++i) {
    minmax([i](const ParameterVector& pv) { return pv.ln_rmax[i]; }, b.rmax_lo[i], b.rmax_hi[i]);
    minmax([i](const ParameterVector& pv) { return pv.phi0[i]; }, b.phi0_lo[i], b.phi0_hi[i]);
  }
  for (std::size_t k = 0; k < b.phi_lo.size(); ++k)
    minmax([k](const ParameterVector& pv) { return pv.phi.v[k]; }, b.phi_lo[k], b.phi_hi[k]);
  return b;
}

ParameterVector sample_point(const Box& box, const ModelBundle& bundle, RandomSource& rng) {
  const int n = bundle.n_species();
  ParameterVector pv;
  pv.ln_kappa = rng.uniform(box.kappa_lo, box.kappa_hi);
  pv.ln_rmax.resize(n);
  pv.phi0.resize(n);
  for (int i = 0; i < n; ++i) {
    pv.ln_rmax[i] = rng.uniform(box.rmax_lo[i], box.rmax_hi[i]);
    pv.phi0[i] = rng.uniform(box.phi0_lo[i], box.phi0_hi[i]);
  }
  pv.phi = PhiMatrix(bundle.n_years, n);
  for (std::size_t k = 0; k < pv.phi.v.size(); ++k)
    pv.phi.v[k] = rng.uniform(box.phi_lo[k], box.phi_hi[k]);
  pv.variances = bundle.default_variances();
  return pv;
}

}  // namespace

namespace {

ParameterVector condition_rates_impl(const ModelBundle& bundle, const ObservationSet& obs,
                                     const ParameterVector& pv, const ModelState& spun) {
  ParameterVector out = pv;
  const SpectrumModel& model = *bundle.model;
  const StaticParams statics = pv.static_params();
  const double lo = bundle.prior.phi.lo, hi = bundle.prior.phi.hi;

  ModelState state = spun;
  for (int t = 1; t <= bundle.n_years; ++t) {
    // First guess: observed catch over the selectable biomass at the start of
    // the year; then a couple of fixed-point corrections against the catch the
    // step actually produces.
    FishingRates rates;
    rates.phi.assign(bundle.n_species(), 0.0);
    for (int sp = 0; sp < bundle.n_species(); ++sp) {
      double bsel = 0.0;
      for (int b = 0; b < model.grid().n_fish_bins(); ++b)
        bsel += model.species(sp).catchability[b] * state.at(sp, b) * model.grid().center(b) *
                model.grid().width(b);
      bsel *= 1e-6;
      double phi = pv.phi.at(t, sp);  // keep the sampled rate when unobserved
      if (obs.has_w(t, sp) && bsel > 0.0) phi = obs.w_at(t, sp) / bsel;
      rates.phi[sp] = std::min(hi, std::max(phi, lo + 1e-6));
    }

    StepResult step = model.step_year(state, rates, statics);
    for (int pass = 0; pass < 2; ++pass) {
      bool adjusted = false;
      for (int sp = 0; sp < bundle.n_species(); ++sp) {
        if (!obs.has_w(t, sp) || !(step.catches.commercial[sp] > 0.0)) continue;
        const double factor = obs.w_at(t, sp) / step.catches.commercial[sp];
        if (std::abs(factor - 1.0) < 1e-3) continue;
        rates.phi[sp] = std::min(hi, std::max(rates.phi[sp] * factor, lo + 1e-6));
        adjusted = true;
      }
      if (!adjusted) break;
      step = model.step_year(state, rates, statics);
    }

    for (int sp = 0; sp < bundle.n_species(); ++sp) out.phi.at(t, sp) = rates.phi[sp];
    state = std::move(step.state);
  }
  return out;
}

}  // namespace

ParameterVector condition_rates_on_catches(const ModelBundle& bundle, const ObservationSet& obs,
                                           const ParameterVector& pv) {
  return condition_rates_impl(bundle, obs, pv, bundle.spun_state(pv));
}

namespace {

double implausibility_from(const ObservationSet& obs, const TrajectoryResult& traj,
                           double sigma2_c_eff, double sigma2_s_eff) {
  double worst = 0.0;
  for (int t = 1; t <= obs.n_years; ++t) {
    const CatchRecord& c = traj.catches[t - 1];
    for (int sp = 0; sp < obs.n_species; ++sp) {
      if (obs.has_w(t, sp)) {
        if (!(c.commercial[sp] > 0.0)) return kInf;
        const double d = std::abs(std::log(obs.w_at(t, sp)) - std::log(c.commercial[sp]));
        worst = std::max(worst, d / std::sqrt(sigma2_c_eff));
      }
      if (t >= obs.first_survey_year && obs.has_z(t, sp)) {
        if (!(c.survey[sp] > 0.0)) return kInf;
        const double d = std::abs(std::log(obs.z_at(t, sp)) - std::log(c.survey[sp]));
        worst = std::max(worst, d / std::sqrt(sigma2_s_eff));
      }
    }
  }
  return worst;
}

}  // namespace

double implausibility(const ModelBundle& bundle, const ObservationSet& obs,
                      const ParameterVector& pv, double sigma2_c_eff, double sigma2_s_eff) {
  TrajectoryResult traj;
  try {
    traj = bundle.model->run_trajectory(bundle.spun_state(pv), pv.phi, pv.static_params());
  } catch (const RuntimeFailure&) {
    return kInf;
  }
  return implausibility_from(obs, traj, sigma2_c_eff, sigma2_s_eff);
}

HistoryMatchResult history_match(const ModelBundle& bundle, const ObservationSet& obs,
                                 const HistoryMatchConfig& cfg, std::uint64_t seed, int threads) {
  require(cfg.waves >= 1, "history_match: need at least one wave");
  require(cfg.points_per_wave >= 10, "history_match: need at least 10 points per wave");
  require(cfg.threshold > 0.0, "history_match: threshold must be > 0");

  const double disc = cfg.discrepancy_var > 0.0
                          ? cfg.discrepancy_var
                          : 0.5 * (bundle.prior.typical_sigma2_c() + bundle.prior.typical_sigma2_s());
  const double s2c = bundle.prior.typical_sigma2_c() + disc;
  const double s2s = bundle.prior.typical_sigma2_s() + disc;

  HistoryMatchResult result;
  result.threshold_used = cfg.threshold;

  const Box prior = prior_box(bundle.prior, bundle.n_species(), bundle.n_years);
  Box box = prior;
  std::vector<HistoryMatchPoint> survivors;

  for (int wave = 0; wave < cfg.waves; ++wave) {
    std::vector<HistoryMatchPoint> points(cfg.points_per_wave);
    parallel_for(cfg.points_per_wave, threads, [&](int j) {
      RngStream rng(seed, {0x41a7u, static_cast<std::uint64_t>(wave),
                           static_cast<std::uint64_t>(j)});
      points[j].pv = sample_point(box, bundle, rng);
      try {
        if (!cfg.condition_rates) {
          const ModelState spun = bundle.spun_state(points[j].pv);
          const TrajectoryResult traj =
              bundle.model->run_trajectory(spun, points[j].pv.phi, points[j].pv.static_params());
          points[j].implausibility = implausibility_from(obs, traj, s2c, s2s);
          return;
        }
        // Condition the rates on the commercial catches, then absorb the mean
        // survey log-residual into ln kappa (the overall biomass scale) and
        // repeat once: the waves then search the genuinely free directions.
        ParameterVector& pv = points[j].pv;
        for (int round = 0; round < 2; ++round) {
          const ModelState spun = bundle.spun_state(pv);
          pv = condition_rates_impl(bundle, obs, pv, spun);
          if (obs.count_z() == 0) break;
          const TrajectoryResult traj =
              bundle.model->run_trajectory(spun, pv.phi, pv.static_params());
          double mean_resid = 0.0;
          int n = 0;
          for (int t = obs.first_survey_year; t <= obs.n_years; ++t)
            for (int sp = 0; sp < obs.n_species; ++sp)
              if (obs.has_z(t, sp) && traj.catches[t - 1].survey[sp] > 0.0) {
                mean_resid += std::log(obs.z_at(t, sp)) -
                              std::log(traj.catches[t - 1].survey[sp]);
                ++n;
              }
          if (n == 0) break;
          mean_resid /= n;
          const double shift = std::max(-2.0, std::min(2.0, mean_resid));
          pv.ln_kappa = std::max(bundle.prior.ln_kappa.lo + 1e-6,
                                 std::min(bundle.prior.ln_kappa.hi - 1e-6, pv.ln_kappa + shift));
        }
        const ModelState spun = bundle.spun_state(pv);
        pv = condition_rates_impl(bundle, obs, pv, spun);  // consistent with final kappa
        const TrajectoryResult traj =
            bundle.model->run_trajectory(spun, pv.phi, pv.static_params());
        points[j].implausibility = implausibility_from(obs, traj, s2c, s2s);
      } catch (const RuntimeFailure&) {
        points[j].implausibility = kInf;
      }
    });
    result.points_evaluated += cfg.points_per_wave;

    // Carry earlier survivors forward so the pool never shrinks to nothing.
    for (auto& p : survivors) points.push_back(std::move(p));

    double threshold = result.threshold_used;
    std::vector<HistoryMatchPoint> keep;
    for (;;) {
      keep.clear();
      for (const auto& p : points)
        if (p.implausibility <= threshold) keep.push_back(p);
      if (!keep.empty()) break;
      threshold *= 2.0;
      result.warnings.push_back("wave " + std::to_string(wave + 1) +
                                ": no survivors, threshold relaxed to " +
                                std::to_string(threshold));
      if (!std::isfinite(threshold)) {
        // Every sampled point is infeasible; keep the least implausible.
        auto best = std::min_element(points.begin(), points.end(),
                                     [](const auto& a, const auto& b) {
                                       return a.implausibility < b.implausibility;
                                     });
        keep.push_back(*best);
        break;
      }
    }
    result.threshold_used = threshold;
    survivors = std::move(keep);

    // Refocus the next wave on the most plausible quarter of the survivors
    // (at least 5) so the sampling box actually contracts.
    std::sort(survivors.begin(), survivors.end(), [](const auto& a, const auto& b) {
      return a.implausibility < b.implausibility;
    });
    const std::size_t top = std::max<std::size_t>(5, survivors.size() / 4);
    std::vector<HistoryMatchPoint> focus(survivors.begin(),
                                         survivors.begin() + std::min(top, survivors.size()));
    box = survivor_box(focus, prior);
  }

  std::sort(survivors.begin(), survivors.end(), [](const auto& a, const auto& b) {
    return a.implausibility < b.implausibility;
  });
  result.survivors = std::move(survivors);
  return result;
}

}  // namespace ssfit
