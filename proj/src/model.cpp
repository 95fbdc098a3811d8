#include "ssfit/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "ssfit/errors.hpp"

namespace ssfit {

std::uint64_t ModelState::content_hash() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto feed = [&h](const void* data, std::size_t bytes) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < bytes; ++i) {
      h ^= p[i];
      h *= 0x100000001b3ULL;
    }
  };
  feed(&year_index, sizeof(year_index));
  if (!n.empty()) feed(n.data(), n.size() * sizeof(double));
  if (!n_resource.empty()) feed(n_resource.data(), n_resource.size() * sizeof(double));
  return h;
}

FishingRates PhiMatrix::year(int t) const {
  FishingRates out;
  out.phi.assign(v.begin() + static_cast<std::size_t>(t - 1) * n_species,
                 v.begin() + static_cast<std::size_t>(t) * n_species);
  return out;
}

SpectrumModel::SpectrumModel(WeightGrid grid, std::vector<SpeciesParams> species,
                             ResourceParams resource_law, DynamicsConfig cfg)
    : grid_(std::move(grid)), species_(std::move(species)), resource_(resource_law), cfg_(cfg) {
  require(!species_.empty(), "SpectrumModel: no species");
  require(cfg_.substeps_per_year >= 1, "SpectrumModel: substeps_per_year must be >= 1");
  require(resource_.lambda > 1.5 && resource_.lambda < 2.5,
          "SpectrumModel: lambda outside (1.5, 2.5)");
  require(resource_.regen_coeff > 0.0, "SpectrumModel: resource regeneration must be > 0");

  const int nb = grid_.n_fish_bins();
  const int ne = grid_.n_resource_bins();
  const int ns = n_species();

  for (const auto& sp : species_) sp.validate(grid_);

  egg_bin_.resize(ns);
  inf_bin_.resize(ns);
  intake_.assign(ns, std::vector<double>(nb));
  metabolism_.assign(ns, std::vector<double>(nb));
  search_.assign(ns, std::vector<double>(nb));
  maturity_.assign(ns, std::vector<double>(nb));
  repro_alloc_.assign(ns, std::vector<double>(nb));
  kernel_.assign(ns, std::vector<double>(static_cast<std::size_t>(nb) * ne));

  for (int i = 0; i < ns; ++i) {
    const SpeciesParams& sp = species_[i];
    egg_bin_[i] = grid_.fish_bin_at(sp.w_egg);
    int top = nb - 1;
    while (top > egg_bin_[i] && grid_.center(top) > sp.w_inf) --top;
    inf_bin_[i] = top;
    require(inf_bin_[i] > egg_bin_[i],
            "species '" + sp.name + "': grid too coarse for its weight range");

    const double log_beta = std::log(sp.ppmr_location);
    const double two_sig2 = 2.0 * sp.ppmr_width * sp.ppmr_width;
    for (int b = 0; b < nb; ++b) {
      const double m = grid_.center(b);
      intake_[i][b] = sp.max_intake_coeff * std::pow(m, sp.intake_exponent);
      metabolism_[i][b] = cfg_.critical_feeding * cfg_.assimilation * intake_[i][b];
      search_[i][b] = sp.search_volume_coeff * std::pow(m, sp.search_exponent);
      maturity_[i][b] =
          1.0 / (1.0 + std::pow(m / sp.w_mat, -cfg_.maturity_sharpness));
      const double alloc =
          maturity_[i][b] * std::pow(m / sp.w_inf, 1.0 - sp.intake_exponent);
      repro_alloc_[i][b] = std::min(alloc, 1.0);

      double* row = &kernel_[i][static_cast<std::size_t>(b) * ne];
      for (int k = 0; k < ne; ++k) {
        const double wp = grid_.center_ext(k);
        if (wp >= m) {
          row[k] = 0.0;  // prey at least predator-sized: no feeding
          continue;
        }
        const double z = std::log(m / wp) - log_beta;
        const double val = std::exp(-z * z / two_sig2);
        row[k] = val < 1e-12 ? 0.0 : val;
      }
    }
  }

  res_capacity_unit_.resize(ne);
  res_regen_.resize(ne);
  for (int k = 0; k < ne; ++k) {
    const double w = grid_.center_ext(k);
    res_capacity_unit_[k] = std::pow(w, -resource_.lambda);
    res_regen_[k] = resource_.regen_coeff * std::pow(w, resource_.regen_exponent);
  }
}

ModelState SpectrumModel::initial_state(const StaticParams& sp) const {
  require(sp.kappa > 0.0, "initial_state: kappa must be > 0");
  require(static_cast<int>(sp.rmax.size()) == n_species(), "initial_state: rmax length mismatch");

  ModelState st;
  st.year_index = 0;
  st.n_species = n_species();
  st.n_bins = grid_.n_fish_bins();
  st.n.assign(static_cast<std::size_t>(st.n_species) * st.n_bins, 0.0);
  st.n_resource.resize(grid_.n_resource_bins());

  for (int k = 0; k < grid_.n_resource_bins(); ++k)
    st.n_resource[k] = sp.kappa * res_capacity_unit_[k];
  for (int i = 0; i < st.n_species; ++i) {
    for (int b = egg_bin_[i]; b <= inf_bin_[i]; ++b) {
      st.at(i, b) = cfg_.init_density_frac * sp.kappa *
                    std::pow(grid_.center(b), -resource_.lambda);
    }
  }
  return st;
}

void SpectrumModel::substep(ModelState& state, const FishingRates& rates, const StaticParams& sp,
                            double dt, int year, CatchRecord& acc, long& clipped) const {
  const int nb = grid_.n_fish_bins();
  const int ne = grid_.n_resource_bins();
  const int ns = n_species();
  const int ext0 = grid_.resource_extension();

  // Community biomass per extended bin: (resource + all fish) * m * dm.
  static thread_local std::vector<double> community, feed, mu_pred, growth, egrow;
  community.assign(ne, 0.0);
  for (int k = 0; k < ne; ++k)
    community[k] = state.n_resource[k] * grid_.center_ext(k) * grid_.width_ext(k);
  for (int i = 0; i < ns; ++i) {
    const double* ni = &state.n[static_cast<std::size_t>(i) * nb];
    for (int b = egg_bin_[i]; b <= inf_bin_[i]; ++b)
      community[ext0 + b] += ni[b] * grid_.center(b) * grid_.width(b);
  }

  // Encounter and feeding level per predator bin, then predation pressure
  // per prey bin from the same kernel rows.
  feed.assign(static_cast<std::size_t>(ns) * nb, 0.0);
  mu_pred.assign(ne, 0.0);
  for (int i = 0; i < ns; ++i) {
    const double* ni = &state.n[static_cast<std::size_t>(i) * nb];
    double* fi = &feed[static_cast<std::size_t>(i) * nb];
    for (int b = egg_bin_[i]; b <= inf_bin_[i]; ++b) {
      const double* row = &kernel_[i][static_cast<std::size_t>(b) * ne];
      double enc = 0.0;
      for (int k = 0; k < ne; ++k) enc += row[k] * community[k];
      enc *= search_[i][b];
      fi[b] = enc / (enc + intake_[i][b]);
      const double coef = (1.0 - fi[b]) * search_[i][b] * ni[b] * grid_.width(b);
      if (coef > 0.0) {
        for (int k = 0; k < ne; ++k) mu_pred[k] += coef * row[k];
      }
    }
  }

  // Species updates: growth, recruitment, then the implicit upwind sweep.
  for (int i = 0; i < ns; ++i) {
    const SpeciesParams& spec = species_[i];
    double* ni = &state.n[static_cast<std::size_t>(i) * nb];
    const double* fi = &feed[static_cast<std::size_t>(i) * nb];

    growth.assign(nb, 0.0);
    egrow.assign(nb, 0.0);
    double egg_production = 0.0;  // grams/(vol*year) routed to spawning
    for (int b = egg_bin_[i]; b <= inf_bin_[i]; ++b) {
      const double net = cfg_.assimilation * fi[b] * intake_[i][b] - metabolism_[i][b];
      const double e = net > 0.0 ? net : 0.0;
      growth[b] = e * (1.0 - repro_alloc_[i][b]);
      egg_production += e * repro_alloc_[i][b] * ni[b] * grid_.width(b);
    }
    growth[inf_bin_[i]] = 0.0;  // closed top boundary

    // Beverton-Holt recruitment flux in numbers/(vol*year).
    const double recruits_potential =
        spec.recruitment_efficiency * egg_production / (2.0 * spec.w_egg);
    const double rmax = sp.rmax[i];
    const double recruits = rmax * recruits_potential / (recruits_potential + rmax);

    const double phi = rates.phi[i];
    const double effort = spec.survey_effort(year);
    double catch_comm = 0.0;
    double catch_surv = 0.0;
    double upstream = 0.0;  // growth[b-1] * n_new[b-1]
    for (int b = egg_bin_[i]; b <= inf_bin_[i]; ++b) {
      const double dm = grid_.width(b);
      const double f_comm = phi * spec.catchability[b];
      const double f_surv = effort * spec.survey_catchability[b];
      const double mu = mu_pred[ext0 + b] + spec.background_mortality_coeff + f_comm + f_surv;
      double influx = upstream / dm;
      if (b == egg_bin_[i]) influx += recruits / dm;
      double n_new = (ni[b] + dt * influx) / (1.0 + dt * (mu + growth[b] / dm));
      if (n_new < 0.0) {  // unreachable for this scheme; counted defensively
        n_new = 0.0;
        ++clipped;
      }
      ni[b] = n_new;
      upstream = growth[b] * n_new;
      const double bio = n_new * grid_.center(b) * dm;
      catch_comm += f_comm * bio;
      catch_surv += f_surv * bio;
    }
    acc.commercial[i] += dt * catch_comm * 1e-6;  // grams -> tonnes
    acc.survey[i] += dt * catch_surv * 1e-6;
  }

  // Semichemostat resource: regeneration toward kappa * m^(-lambda) against
  // predation, also implicit.
  for (int k = 0; k < ne; ++k) {
    const double cap = sp.kappa * res_capacity_unit_[k];
    const double r = res_regen_[k];
    state.n_resource[k] =
        (state.n_resource[k] + dt * r * cap) / (1.0 + dt * (r + mu_pred[k]));
  }
}

StepResult SpectrumModel::step_year(const ModelState& state, const FishingRates& rates,
                                    const StaticParams& sp) const {
  require(static_cast<int>(rates.phi.size()) == n_species(), "step_year: rates length mismatch");
  require(static_cast<int>(sp.rmax.size()) == n_species(), "step_year: rmax length mismatch");
  require(state.n_species == n_species() && state.n_bins == grid_.n_fish_bins(),
          "step_year: state shape mismatch");

  StepResult out;
  out.state = state;
  out.state.year_index = state.year_index + 1;
  out.catches.commercial.assign(n_species(), 0.0);
  out.catches.survey.assign(n_species(), 0.0);

  // Survey effort is per species and calendar year; years at or before the
  // end of spin-up (year <= 0) carry none.
  const int year = state.year_index + 1;
  const double dt = 1.0 / cfg_.substeps_per_year;
  for (int s = 0; s < cfg_.substeps_per_year; ++s)
    substep(out.state, rates, sp, dt, year, out.catches, out.clipped_bins);

  // Blow-up and clipping checks once per year.
  for (int i = 0; i < n_species(); ++i) {
    for (int b = 0; b < grid_.n_fish_bins(); ++b) {
      if (!std::isfinite(out.state.at(i, b))) {
        throw RuntimeFailure("integration blow-up: species '" + species_[i].name + "', bin " +
                             std::to_string(b) + ", year " + std::to_string(year));
      }
    }
  }
  for (int k = 0; k < grid_.n_resource_bins(); ++k) {
    if (!std::isfinite(out.state.n_resource[k]))
      throw RuntimeFailure("integration blow-up: resource bin " + std::to_string(k) + ", year " +
                           std::to_string(year));
  }
  const double total_updates =
      static_cast<double>(n_species()) * grid_.n_fish_bins() * cfg_.substeps_per_year;
  if (out.clipped_bins > cfg_.clip_fraction_limit * total_updates) {
    throw RuntimeFailure("unstable integration: " + std::to_string(out.clipped_bins) +
                         " clipped bin updates in year " + std::to_string(year));
  }
  return out;
}

SpinUpResult SpectrumModel::spin_up(const FishingRates& rates0, const StaticParams& sp, int years,
                                    double tol) const {
  require(years >= 1, "spin_up: years must be >= 1");

  SpinUpResult out;
  ModelState state = initial_state(sp);
  state.year_index = -years;

  std::vector<double> ssb_prev = ssb(state);
  double metric = std::numeric_limits<double>::infinity();
  int y = 0;
  while (y < years) {
    state = step_year(state, rates0, sp).state;
    ++y;
    std::vector<double> ssb_now = ssb(state);
    metric = 0.0;
    for (std::size_t i = 0; i < ssb_now.size(); ++i) {
      const double before = ssb_prev[i];
      const double after = ssb_now[i];
      if (before < 1e-12 && after < 1e-12) continue;  // extinct and staying so
      metric = std::max(metric, std::abs(after - before) / std::max(before, 1e-12));
    }
    ssb_prev = std::move(ssb_now);
    if (tol > 0.0 && y >= 10 && metric < tol) break;
  }

  state.year_index = 0;
  out.state = std::move(state);
  out.stationarity = metric;
  out.years_run = y;
  return out;
}

TrajectoryResult SpectrumModel::run_trajectory(const ModelState& state0, const PhiMatrix& phi,
                                               const StaticParams& sp) const {
  require(phi.n_species == n_species(), "run_trajectory: phi species mismatch");
  require(state0.year_index >= 0 && state0.year_index <= phi.n_years,
          "run_trajectory: state year outside phi range");

  TrajectoryResult out;
  out.states.reserve(phi.n_years - state0.year_index);
  out.catches.reserve(phi.n_years - state0.year_index);

  ModelState cur = state0;
  for (int t = state0.year_index + 1; t <= phi.n_years; ++t) {
    try {
      StepResult step = step_year(cur, phi.year(t), sp);
      cur = step.state;
      out.states.push_back(step.state);
      out.catches.push_back(std::move(step.catches));
    } catch (const RuntimeFailure& e) {
      throw RuntimeFailure("trajectory failed in year " + std::to_string(t) + ": " + e.what());
    }
  }
  return out;
}

std::vector<double> SpectrumModel::ssb(const ModelState& state) const {
  std::vector<double> out(n_species(), 0.0);
  for (int i = 0; i < n_species(); ++i) {
    double total = 0.0;
    for (int b = egg_bin_[i]; b <= inf_bin_[i]; ++b)
      total += state.at(i, b) * maturity_[i][b] * grid_.center(b) * grid_.width(b);
    out[i] = total * 1e-6;
  }
  return out;
}

std::vector<double> SpectrumModel::total_biomass(const ModelState& state) const {
  std::vector<double> out(n_species(), 0.0);
  for (int i = 0; i < n_species(); ++i) {
    double total = 0.0;
    for (int b = 0; b < grid_.n_fish_bins(); ++b)
      total += state.at(i, b) * grid_.center(b) * grid_.width(b);
    out[i] = total * 1e-6;
  }
  return out;
}

void SpectrumModel::validate_state(const ModelState& state, double kappa) const {
  for (int i = 0; i < n_species(); ++i)
    for (int b = 0; b < grid_.n_fish_bins(); ++b) {
      const double v = state.at(i, b);
      require(std::isfinite(v) && v >= 0.0, "state: bad density, species " + std::to_string(i) +
                                                " bin " + std::to_string(b));
    }
  for (int k = 0; k < grid_.n_resource_bins(); ++k) {
    const double v = state.n_resource[k];
    require(std::isfinite(v) && v >= 0.0, "state: bad resource density");
    require(v <= kappa * res_capacity_unit_[k] * (1.0 + 1e-9),
            "state: resource above carrying capacity at bin " + std::to_string(k));
  }
}

}  // namespace ssfit
