#include "ssfit/model_build.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <numbers>

#include "ssfit/errors.hpp"

namespace ssfit {

namespace {

// Piecewise-linear interpolation in ln-weight, clamped outside the table.
std::vector<double> interp_onto_grid(const std::vector<std::pair<double, double>>& points,
                                     const WeightGrid& grid) {
  std::vector<double> out(grid.n_fish_bins());
  for (int b = 0; b < grid.n_fish_bins(); ++b) {
    const double lw = std::log(grid.center(b));
    if (lw <= std::log(points.front().first)) {
      out[b] = points.front().second;
    } else if (lw >= std::log(points.back().first)) {
      out[b] = points.back().second;
    } else {
      for (std::size_t i = 1; i < points.size(); ++i) {
        const double l0 = std::log(points[i - 1].first);
        const double l1 = std::log(points[i].first);
        if (lw <= l1) {
          const double f = (lw - l0) / (l1 - l0);
          out[b] = points[i - 1].second + f * (points[i].second - points[i - 1].second);
          break;
        }
      }
    }
  }
  return out;
}

std::vector<double> sigmoid_selectivity(const WeightGrid& grid, double w50, double slope) {
  std::vector<double> out(grid.n_fish_bins());
  for (int b = 0; b < grid.n_fish_bins(); ++b)
    out[b] = 1.0 / (1.0 + std::exp(-slope * (std::log(grid.center(b)) - std::log(w50))));
  return out;
}

void renormalize_max1(std::vector<double>& q) {
  const double mx = *std::max_element(q.begin(), q.end());
  if (mx <= 0.0) return;  // unfished species stay all-zero
  for (double& v : q) v /= mx;
}

}  // namespace

std::string join_path(const std::string& base, const std::string& rel) {
  std::filesystem::path p(rel);
  if (p.is_absolute() || base.empty()) return rel;
  return (std::filesystem::path(base) / p).string();
}

double gamma_for_feeding_level(double f0, double max_intake_coeff, double kappa_ref, double beta,
                               double sigma, double lambda) {
  require(f0 > 0.0 && f0 < 1.0, "gamma_for_feeding_level: f0 must be in (0,1)");
  const double lam2 = 2.0 - lambda;
  const double kernel_mass = std::sqrt(2.0 * std::numbers::pi) * sigma *
                             std::pow(beta, -lam2) * std::exp(lam2 * lam2 * sigma * sigma / 2.0);
  return f0 * max_intake_coeff / ((1.0 - f0) * kappa_ref * kernel_mass);
}

int ModelBundle::species_index(const std::string& name) const {
  for (int i = 0; i < n_species(); ++i)
    if (species_names[i] == name) return i;
  throw ValidationError("unknown species: " + name);
}

VarianceParams ModelBundle::default_variances() const {
  VarianceParams v;
  const int n = n_species();
  v.sigma2_c.assign(n, prior.typical_sigma2_c());
  v.sigma2_s.assign(n, prior.typical_sigma2_s());
  v.fixed_c = fixed_sigma2_c;
  for (int i = 0; i < n; ++i)
    if (fixed_sigma2_c[i]) v.sigma2_c[i] = fixed_sigma2_c_value[i];
  return v;
}

ModelState ModelBundle::spun_state(const ParameterVector& pv) const {
  return model
      ->spin_up(pv.spinup_rates(), pv.static_params(), spinup_years,
                spinup_early_exit ? spinup_tol : -1.0)
      .state;
}

ModelBundle build_model_bundle(const Config& cfg, const std::string& base_dir) {
  const auto rows = load_species_table(join_path(base_dir, cfg.get_string("data.species_table")));
  const int n_species = static_cast<int>(rows.size());

  const int n_years = static_cast<int>(cfg.get_int("years.count"));
  require(n_years >= 1, "config: years.count must be >= 1");
  const int first_survey = static_cast<int>(cfg.get_int("years.first_survey", 1));
  require(first_survey >= 1, "config: years.first_survey must be >= 1");

  double w_egg_min = rows[0].w_egg, w_inf_max = rows[0].w_inf;
  for (const auto& r : rows) {
    w_egg_min = std::min(w_egg_min, r.w_egg);
    w_inf_max = std::max(w_inf_max, r.w_inf);
  }

  const int n_bins = static_cast<int>(cfg.get_int("model.n_bins", 100));
  const double ext_decades = cfg.get_real("model.resource_extension_decades", 4.0);
  const double bins_per_decade =
      n_bins / ((std::log(w_inf_max) - std::log(w_egg_min)) / std::numbers::ln10);
  const int extension = std::max(1, static_cast<int>(std::ceil(ext_decades * bins_per_decade)));
  WeightGrid grid(w_egg_min, w_inf_max, n_bins, extension);

  ResourceParams resource;
  resource.kappa = 1.0;  // sampled at run time
  resource.lambda = cfg.get_real("model.lambda", 2.05);
  resource.regen_coeff = cfg.get_real("model.resource_regen_coeff", 10.0);
  resource.regen_exponent = cfg.get_real("model.resource_regen_exponent", -1.0 / 3.0);

  DynamicsConfig dyn;
  dyn.substeps_per_year = static_cast<int>(cfg.get_int("model.substeps", 10));
  dyn.assimilation = cfg.get_real("model.assimilation", 0.6);
  dyn.critical_feeding = cfg.get_real("model.critical_feeding", 0.25);
  dyn.maturity_sharpness = cfg.get_real("model.maturity_sharpness", 10.0);
  dyn.init_density_frac = cfg.get_real("model.init_density_frac", 0.01);
  dyn.clip_fraction_limit = cfg.get_real("model.clip_fraction_limit", 1e-3);

  const double default_beta = cfg.get_real("model.default_ppmr", 100.0);
  const double default_sigma = cfg.get_real("model.default_ppmr_width", 1.3);
  const double default_erepro = cfg.get_real("model.default_erepro", 1.0);
  const double z0pre = cfg.get_real("model.background_z0pre", 0.6);
  const double f0 = cfg.get_real("model.feeding_level_ref", 0.6);

  CatchabilityTable comm_table, surv_table;
  if (cfg.has("data.catchability"))
    comm_table = load_catchability(join_path(base_dir, cfg.get_string("data.catchability")));
  if (cfg.has("data.survey_catchability"))
    surv_table = load_catchability(join_path(base_dir, cfg.get_string("data.survey_catchability")));

  std::vector<double> effort(n_years, 0.0);
  if (cfg.has("data.survey_effort"))
    effort = load_survey_effort(join_path(base_dir, cfg.get_string("data.survey_effort")), n_years);

  std::vector<SpeciesParams> species;
  species.reserve(n_species);
  for (const auto& r : rows) {
    SpeciesParams sp;
    sp.name = r.name;
    sp.w_egg = r.w_egg;
    sp.w_mat = r.w_mat;
    sp.w_inf = r.w_inf;
    sp.max_intake_coeff = r.max_intake_coeff;
    sp.intake_exponent = r.intake_exponent;
    sp.ppmr_location = r.ppmr_location > 0.0 ? r.ppmr_location : default_beta;
    sp.ppmr_width = r.ppmr_width > 0.0 ? r.ppmr_width : default_sigma;
    sp.search_exponent =
        r.search_exponent > 0.0 ? r.search_exponent
                                : r.intake_exponent + resource.lambda - 2.0;
    if (r.search_volume_coeff) {
      sp.search_volume_coeff = *r.search_volume_coeff;
    } else {
      require(cfg.has("model.kappa_ref"),
              "config: model.kappa_ref needed to derive search volumes");
      sp.search_volume_coeff =
          gamma_for_feeding_level(f0, sp.max_intake_coeff, cfg.get_real("model.kappa_ref"),
                                  sp.ppmr_location, sp.ppmr_width, resource.lambda);
    }
    sp.background_mortality_coeff =
        r.background_mortality ? *r.background_mortality
                               : z0pre * std::pow(r.w_inf, r.intake_exponent - 1.0);
    sp.recruitment_efficiency =
        r.recruitment_efficiency > 0.0 ? r.recruitment_efficiency : default_erepro;

    if (auto it = comm_table.find(r.name); it != comm_table.end()) {
      sp.catchability = interp_onto_grid(it->second, grid);
    } else {
      sp.catchability =
          sigmoid_selectivity(grid, r.sel_w50.value_or(r.w_mat), r.sel_slope.value_or(5.0));
    }
    renormalize_max1(sp.catchability);

    if (auto it = surv_table.find(r.name); it != surv_table.end()) {
      sp.survey_catchability = interp_onto_grid(it->second, grid);
    } else {
      const double q_scale = r.survey_q.value_or(0.0);
      sp.survey_catchability = sigmoid_selectivity(grid, r.survey_w50.value_or(r.w_mat / 10.0),
                                                   r.survey_slope.value_or(2.0));
      for (double& v : sp.survey_catchability) v *= q_scale;
    }
    sp.survey_effort_by_year = effort;
    species.push_back(std::move(sp));
  }

  ModelBundle bundle;
  bundle.model = std::make_shared<SpectrumModel>(grid, std::move(species), resource, dyn);
  bundle.n_years = n_years;
  bundle.first_survey_year = first_survey;
  bundle.spinup_years = static_cast<int>(cfg.get_int("spinup.years", 300));
  bundle.spinup_tol = cfg.get_real("spinup.tol", 1e-6);
  bundle.spinup_early_exit = cfg.get_bool("spinup.early_exit", true);

  for (const auto& r : rows) {
    bundle.species_names.push_back(r.name);
    bundle.fixed_sigma2_c.push_back(r.sigma2_c_fixed.has_value());
    bundle.fixed_sigma2_c_value.push_back(r.sigma2_c_fixed.value_or(0.0));
    bundle.w_masked.push_back(r.w_masked);
  }
  return bundle;
}

}  // namespace ssfit
