// Throwaway probe for picking toy-model constants. Not part of the build.
#include <cmath>
#include <cstdio>
#include <vector>

#include "ssfit/model.hpp"
#include "ssfit/model_build.hpp"

using namespace ssfit;

SpeciesParams make_species(const WeightGrid& grid, const char* name, double w_inf, double kappa_ref,
                           double lambda, double survey_q) {
  SpeciesParams sp;
  sp.name = name;
  sp.w_egg = 1e-3;
  sp.w_mat = 0.25 * w_inf;
  sp.w_inf = w_inf;
  sp.max_intake_coeff = 30.0;
  sp.intake_exponent = 2.0 / 3.0;
  sp.ppmr_location = 100.0;
  sp.ppmr_width = 1.3;
  sp.search_exponent = sp.intake_exponent + lambda - 2.0;
  sp.search_volume_coeff =
      gamma_for_feeding_level(0.6, sp.max_intake_coeff, kappa_ref, sp.ppmr_location, sp.ppmr_width, lambda);
  sp.background_mortality_coeff = 0.6 * std::pow(w_inf, sp.intake_exponent - 1.0);
  sp.recruitment_efficiency = 1.0;
  sp.catchability.resize(grid.n_fish_bins());
  sp.survey_catchability.resize(grid.n_fish_bins());
  for (int b = 0; b < grid.n_fish_bins(); ++b) {
    const double lw = std::log(grid.center(b));
    sp.catchability[b] = 1.0 / (1.0 + std::exp(-5.0 * (lw - std::log(sp.w_mat))));
    sp.survey_catchability[b] =
        survey_q / (1.0 + std::exp(-2.0 * (lw - std::log(sp.w_mat / 10.0))));
  }
  double mx = 0;
  for (double q : sp.catchability) mx = std::max(mx, q);
  for (double& q : sp.catchability) q /= mx;
  sp.survey_effort_by_year.assign(10, 1.0);
  return sp;
}

int main() {
  const double lambda = 2.05;
  const double ln_kappa = 10.0;
  const double kappa = std::exp(ln_kappa);

  WeightGrid grid(1e-3, 2e4, 60, 31);
  std::vector<SpeciesParams> species;
  species.push_back(make_species(grid, "small", 300.0, kappa, lambda, 0.1));
  species.push_back(make_species(grid, "medium", 2000.0, kappa, lambda, 0.1));
  species.push_back(make_species(grid, "large", 20000.0, kappa, lambda, 0.1));

  ResourceParams res{1.0, lambda, 10.0, -1.0 / 3.0};
  DynamicsConfig dyn;
  SpectrumModel model(grid, species, res, dyn);

  for (double ln_rmax : {4.0, 8.0, 12.0, 16.0}) {
    StaticParams sp;
    sp.kappa = kappa;
    sp.rmax.assign(3, std::exp(ln_rmax));
    FishingRates phi0{{0.3, 0.3, 0.3}};
    auto spin = model.spin_up(phi0, sp, 300, -1.0);
    auto ssb = model.ssb(spin.state);
    auto bio = model.total_biomass(spin.state);

    PhiMatrix phi(10, 3, 0.5);
    auto traj = model.run_trajectory(spin.state, phi, sp);
    std::printf("ln_rmax=%4.1f stat=%8.2e ssb=[%9.3g %9.3g %9.3g] bio=[%9.3g %9.3g %9.3g]\n",
                ln_rmax, spin.stationarity, ssb[0], ssb[1], ssb[2], bio[0], bio[1], bio[2]);
    std::printf("   catches y1=[%9.3g %9.3g %9.3g] y10=[%9.3g %9.3g %9.3g] survey y10=[%9.3g %9.3g %9.3g]\n",
                traj.catches[0].commercial[0], traj.catches[0].commercial[1],
                traj.catches[0].commercial[2], traj.catches[9].commercial[0],
                traj.catches[9].commercial[1], traj.catches[9].commercial[2],
                traj.catches[9].survey[0], traj.catches[9].survey[1], traj.catches[9].survey[2]);
  }
  return 0;
}
