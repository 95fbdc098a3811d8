#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ssfit/grid.hpp"
#include "ssfit/species.hpp"

namespace ssfit {

// Abundance densities at one point in time: n(species, fish bin) and the
// resource density on the extended grid, both in 1/(gram * volume).
// year_index = t means the state M_t; the spun-up initial state is t = 0.
struct ModelState {
  int year_index = 0;
  int n_species = 0;
  int n_bins = 0;
  std::vector<double> n;           // species-major, n_species * n_bins
  std::vector<double> n_resource;  // extended grid

  double& at(int sp, int bin) { return n[static_cast<std::size_t>(sp) * n_bins + bin]; }
  double at(int sp, int bin) const { return n[static_cast<std::size_t>(sp) * n_bins + bin]; }

  // FNV-1a over the raw double bits; used by determinism tests and caches.
  std::uint64_t content_hash() const;
};

// Annual fishing-rate multipliers, one per species (1/year). Full fishing
// mortality at size is phi * q(m).
struct FishingRates {
  std::vector<double> phi;
};

// Within-year removals in tonnes per species, split by channel.
struct CatchRecord {
  std::vector<double> commercial;
  std::vector<double> survey;
};

// Year-by-species fishing rate matrix, year-major.
struct PhiMatrix {
  int n_years = 0;
  int n_species = 0;
  std::vector<double> v;

  PhiMatrix() = default;
  PhiMatrix(int years, int species, double fill = 0.0)
      : n_years(years), n_species(species),
        v(static_cast<std::size_t>(years) * species, fill) {}
  double& at(int t, int sp) { return v[static_cast<std::size_t>(t - 1) * n_species + sp]; }
  double at(int t, int sp) const { return v[static_cast<std::size_t>(t - 1) * n_species + sp]; }
  FishingRates year(int t) const;
};

// The sampled quantities that enter the dynamics (the remaining sampled
// quantities -- per-year rates and observation variances -- are passed
// separately).
struct StaticParams {
  double kappa = 0.0;
  std::vector<double> rmax;  // Beverton-Holt recruitment cap per species
};

struct StepResult {
  ModelState state;
  CatchRecord catches;
  long clipped_bins = 0;
};

struct SpinUpResult {
  ModelState state;
  double stationarity = 0.0;  // max relative SSB change over the final year
  int years_run = 0;
};

struct TrajectoryResult {
  std::vector<ModelState> states;    // states[t-1] = M_t
  std::vector<CatchRecord> catches;  // catches[t-1] = removals during year t
};

// Numerical and physiological constants shared by all species.
struct DynamicsConfig {
  int substeps_per_year = 10;
  double assimilation = 0.6;        // fraction of intake retained
  double critical_feeding = 0.25;   // feeding level at which growth stops
  double maturity_sharpness = 10.0; // steepness of the maturity ogive in ln w
  double init_density_frac = 0.01;  // initial fish slope relative to resource
  double clip_fraction_limit = 1e-3;  // negative-density clips tolerated per year
};

// Deterministic multi-species size-spectrum process model. Advances the
// ecosystem state one year at a time: lognormal predator-prey-mass-ratio
// encounter, Holling type-II feeding, growth as assimilated intake minus
// metabolism, predation + background + fishing mortality, Beverton-Holt
// recruitment capped at rmax, semichemostat resource. Transport in weight is
// integrated with a semi-implicit upwind scheme, so densities stay
// non-negative for any substep size.
//
// All methods are const and the model holds no mutable state: identical
// arguments give bit-identical results, and independent trajectories can run
// concurrently.
class SpectrumModel {
public:
  SpectrumModel(WeightGrid grid, std::vector<SpeciesParams> species,
                ResourceParams resource_law, DynamicsConfig cfg);

  int n_species() const { return static_cast<int>(species_.size()); }
  const WeightGrid& grid() const { return grid_; }
  const SpeciesParams& species(int i) const { return species_[i]; }
  const std::vector<SpeciesParams>& all_species() const { return species_; }
  const DynamicsConfig& config() const { return cfg_; }
  const ResourceParams& resource_law() const { return resource_; }

  // Power-law fish slope plus resource at carrying capacity; year_index 0.
  ModelState initial_state(const StaticParams& sp) const;

  // One year of dynamics. Catches accumulate the within-year removals by
  // commercial fishing (phi * q(m)) and the survey (effort(year) * q_s(m)),
  // where year = state.year_index + 1. Throws RuntimeFailure naming species
  // and bin if the integration produces a non-finite density.
  StepResult step_year(const ModelState& state, const FishingRates& rates,
                       const StaticParams& sp) const;

  // Repeated step_year from the initial slope under constant rates. Stops
  // early once the stationarity metric drops below `tol` (pass tol <= 0 to
  // always run the full `years`). The returned state has year_index 0.
  SpinUpResult spin_up(const FishingRates& rates0, const StaticParams& sp, int years = 300,
                       double tol = -1.0) const;

  // Sequential step_year over the rows of phi, resuming from state0 (years
  // state0.year_index+1 .. phi.n_years). Errors are tagged with the year.
  TrajectoryResult run_trajectory(const ModelState& state0, const PhiMatrix& phi,
                                  const StaticParams& sp) const;

  // Spawning stock biomass in tonnes per species: density * weight * maturity
  // ogive integrated over bins.
  std::vector<double> ssb(const ModelState& state) const;

  std::vector<double> total_biomass(const ModelState& state) const;  // tonnes

  // Checks finiteness, non-negativity, and the resource carrying-capacity
  // bound against kappa. Throws on violation.
  void validate_state(const ModelState& state, double kappa) const;

private:
  void substep(ModelState& state, const FishingRates& rates, const StaticParams& sp,
               double dt, int year, CatchRecord& acc, long& clipped) const;

  WeightGrid grid_;
  std::vector<SpeciesParams> species_;
  ResourceParams resource_;  // kappa field unused here; sampled value wins
  DynamicsConfig cfg_;

  // Precomputed per species (index i), per fish bin (index b):
  std::vector<int> egg_bin_, inf_bin_;           // active bin range
  std::vector<std::vector<double>> intake_;      // h * m^n
  std::vector<std::vector<double>> metabolism_;  // fc * alpha * h * m^n
  std::vector<std::vector<double>> search_;      // gamma * m^q
  std::vector<std::vector<double>> maturity_;    // SSB ogive
  std::vector<std::vector<double>> repro_alloc_; // share of net energy to spawn
  std::vector<std::vector<double>> kernel_;      // row b: feeding weight on the
                                                 // extended prey grid, * m * dm
  std::vector<double> res_capacity_unit_;        // m^(-lambda) on extended grid
  std::vector<double> res_regen_;                // regen rate on extended grid
};

}  // namespace ssfit
