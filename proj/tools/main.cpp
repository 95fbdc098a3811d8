// Command-line front end: forward simulation, synthetic data generation,
// history matching, fitting, posterior summaries, residual checks, and the
// kernel validation suite.

#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "ssfit/dataset.hpp"
#include "ssfit/diagnostics.hpp"
#include "ssfit/errors.hpp"
#include "ssfit/fit.hpp"
#include "ssfit/history_match.hpp"
#include "ssfit/parallel.hpp"
#include "ssfit/tables.hpp"
#include "ssfit/validate.hpp"
#include "ssfit/version.hpp"

namespace {

using namespace ssfit;
using nlohmann::json;

struct CommonArgs {
  std::string config_path;
  std::string output_dir = "out";
  std::uint64_t seed = 1;
  int threads = 0;  // 0 = default cap
};

void add_common(CLI::App* cmd, CommonArgs& args, bool need_config) {
  auto* opt = cmd->add_option("--config", args.config_path, "path to the run config file");
  if (need_config) opt->required();
  cmd->add_option("--output", args.output_dir, "output directory");
  cmd->add_option("--seed", args.seed, "random seed");
  cmd->add_option("--threads", args.threads, "thread cap for parallel evaluation");
}

int resolved_threads(const CommonArgs& args) {
  return args.threads > 0 ? args.threads : default_threads();
}

std::string config_dir(const std::string& config_path) {
  return std::filesystem::path(config_path).parent_path().string();
}

void write_dir_manifest(const std::string& dir, const Config& cfg, std::uint64_t seed,
                        const json& files) {
  json manifest;
  manifest["code_version"] = kVersion;
  manifest["config_hash"] = cfg.hash();
  manifest["seed"] = seed;
  manifest["files"] = files;
  std::ofstream out(dir + "/manifest.json", std::ios::trunc);
  out << manifest.dump(2) << '\n';
}

int cmd_simulate(const CommonArgs& args) {
  const Config cfg = Config::parse_file(args.config_path);
  const std::string base = config_dir(args.config_path);
  const ModelBundle bundle = build_model_bundle(cfg, base);
  const ParameterVector truth = truth_from_config(cfg, bundle);
  const SimulationRun run = simulate_point(bundle, truth);

  std::filesystem::create_directories(args.output_dir);
  const std::string catches_path = args.output_dir + "/catches.csv";
  const std::string ssb_path = args.output_dir + "/ssb.csv";
  {
    std::ofstream out(catches_path, std::ios::trunc);
    out << "year,species,commercial,survey\n";
    for (int t = 1; t <= bundle.n_years; ++t)
      for (int sp = 0; sp < bundle.n_species(); ++sp)
        out << t << ',' << bundle.species_names[sp] << ','
            << format_real(run.trajectory.catches[t - 1].commercial[sp]) << ','
            << format_real(run.trajectory.catches[t - 1].survey[sp]) << '\n';
  }
  {
    std::ofstream out(ssb_path, std::ios::trunc);
    out << "year,species,ssb\n";
    for (int t = 1; t <= bundle.n_years; ++t) {
      const auto ssb = bundle.model->ssb(run.trajectory.states[t - 1]);
      for (int sp = 0; sp < bundle.n_species(); ++sp)
        out << t << ',' << bundle.species_names[sp] << ',' << format_real(ssb[sp]) << '\n';
    }
  }
  write_dir_manifest(args.output_dir, cfg, args.seed,
                     json{{"catches", catches_path}, {"ssb", ssb_path}});
  std::printf("simulate: %d years, %d species, spin-up stationarity %.3g (%d years)\n",
              bundle.n_years, bundle.n_species(), run.spinup.stationarity,
              run.spinup.years_run);
  return 0;
}

int cmd_generate(const CommonArgs& args) {
  const Config cfg = Config::parse_file(args.config_path);
  const std::string base = config_dir(args.config_path);
  const ModelBundle bundle = build_model_bundle(cfg, base);
  const ParameterVector truth = truth_from_config(cfg, bundle);
  const ObservationSet obs = generate_synthetic(bundle, truth, args.seed);

  std::filesystem::create_directories(args.output_dir);
  const std::string obs_path = args.output_dir + "/observations.csv";
  const std::string truth_path = args.output_dir + "/truth_params.csv";
  write_observations(obs_path, obs, bundle.species_names);
  write_parameter_file(truth_path, truth, bundle.species_names, 0.0);
  write_dir_manifest(args.output_dir, cfg, args.seed,
                     json{{"observations", obs_path}, {"truth_params", truth_path}});
  std::printf("generate: %d commercial and %d survey observations\n", obs.count_w(),
              obs.count_z());
  return 0;
}

int cmd_history_match(const CommonArgs& args) {
  const Config cfg = Config::parse_file(args.config_path);
  const std::string base = config_dir(args.config_path);
  const ModelBundle bundle = build_model_bundle(cfg, base);
  const ObservationSet obs =
      load_observations(join_path(base, cfg.get_string("data.observations")),
                        bundle.species_names, bundle.n_years, bundle.first_survey_year);

  HistoryMatchConfig hm;
  hm.waves = static_cast<int>(cfg.get_int("hm.waves", 2));
  hm.points_per_wave = static_cast<int>(cfg.get_int("hm.points_per_wave", 150));
  hm.threshold = cfg.get_real("hm.threshold", 3.0);
  hm.discrepancy_var = cfg.get_real("hm.discrepancy_var", 0.0);
  hm.condition_rates = cfg.get_bool("hm.condition_rates", true);

  const HistoryMatchResult res =
      history_match(bundle, obs, hm, args.seed, resolved_threads(args));
  for (const auto& w : res.warnings) std::fprintf(stderr, "warning: %s\n", w.c_str());

  std::filesystem::create_directories(args.output_dir);
  const std::string survivors_path = args.output_dir + "/survivors.csv";
  {
    std::ofstream out(survivors_path, std::ios::trunc);
    const auto header = parameter_header(bundle.species_names, bundle.n_years);
    out << "implausibility";
    for (const auto& h : header) out << ',' << h;
    out << '\n';
    for (const auto& p : res.survivors)
      out << format_real(p.implausibility) << ',' << format_parameter_row(p.pv, 0.0) << '\n';
  }
  write_dir_manifest(args.output_dir, cfg, args.seed, json{{"survivors", survivors_path}});
  std::printf("history-match: %d points evaluated, %zu survivors, threshold %.3g\n",
              res.points_evaluated, res.survivors.size(), res.threshold_used);
  return 0;
}

int cmd_fit(const CommonArgs& args, bool resume, int halt_after) {
  const Config cfg = Config::parse_file(args.config_path);
  FitOptions opt;
  opt.seed = args.seed;
  opt.threads = resolved_threads(args);
  opt.output_dir = args.output_dir;
  opt.resume = resume;
  opt.halt_after = halt_after;
  const FitResult res = run_fit(cfg, config_dir(args.config_path), opt);
  std::printf("fit: %d/%d iterations, log posterior %.4f\n", res.iterations_done,
              res.iterations_requested, res.final_state.log_post());
  return 0;
}

int cmd_summarize(const CommonArgs& args, const std::string& samples_path) {
  const Config cfg = Config::parse_file(args.config_path);
  const std::string base = config_dir(args.config_path);
  const ModelBundle bundle = build_model_bundle(cfg, base);
  const SampleMatrix samples = load_samples(samples_path);
  SummaryOptions opts;
  opts.max_trajectories = static_cast<int>(cfg.get_int("summarize.max_trajectories", 200));
  opts.threads = resolved_threads(args);
  const SummaryFiles files =
      summarize_samples(bundle, samples, args.output_dir, opts, cfg.hash(), args.seed);
  std::printf("summarize: wrote %s\n", files.manifest.c_str());
  return 0;
}

int cmd_residuals(const CommonArgs& args, const std::string& samples_path) {
  const Config cfg = Config::parse_file(args.config_path);
  const std::string base = config_dir(args.config_path);
  const ModelBundle bundle = build_model_bundle(cfg, base);
  const ObservationSet obs =
      load_observations(join_path(base, cfg.get_string("data.observations")),
                        bundle.species_names, bundle.n_years, bundle.first_survey_year);
  const SampleMatrix samples = load_samples(samples_path);
  const ResidualFiles files =
      residual_check(bundle, samples, obs, args.output_dir, cfg.hash(), args.seed);
  std::printf("residuals: wrote %s\n", files.manifest.c_str());
  return 0;
}

int cmd_validate(const CommonArgs& args, bool quick) {
  ValidationOptions opts;
  opts.quick = quick;
  opts.threads = resolved_threads(args);
  opts.seed = args.seed;
  const ValidationReport report = run_kernel_validation(opts, std::cout);
  return report.all_passed ? 0 : 2;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{std::string(kVersion) +
               " - posterior calibration of a multi-species size-spectrum model"};
  app.require_subcommand(1);

  CommonArgs sim_args, gen_args, hm_args, fit_args, sum_args, res_args, val_args;
  bool fit_resume = false;
  int fit_halt_after = 0;
  std::string sum_samples, res_samples;
  bool val_quick = false;

  auto* sim = app.add_subcommand("simulate", "forward run at the config's truth point");
  add_common(sim, sim_args, true);
  auto* gen = app.add_subcommand("generate", "synthetic observations at the truth point");
  add_common(gen, gen_args, true);
  auto* hm = app.add_subcommand("history-match", "prior-space reduction by implausibility");
  add_common(hm, hm_args, true);
  auto* fit = app.add_subcommand("fit", "full posterior fit (history match, pilot, sweep)");
  add_common(fit, fit_args, true);
  fit->add_flag("--resume", fit_resume, "resume from the checkpoint in the output directory");
  fit->add_option("--halt-after", fit_halt_after,
                  "checkpoint and stop after N iterations (resumable)");
  auto* sum = app.add_subcommand("summarize", "posterior summary tables from a samples file");
  add_common(sum, sum_args, true);
  sum->add_option("--samples", sum_samples, "samples.csv from a fit")->required();
  auto* res = app.add_subcommand("residuals", "residual diagnostics at the posterior median");
  add_common(res, res_args, true);
  res->add_option("--samples", res_samples, "samples.csv from a fit")->required();
  auto* val = app.add_subcommand("validate-kernels", "run the sampler validation suite");
  add_common(val, val_args, false);
  val->add_flag("--quick", val_quick, "reduced iteration counts");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    std::cerr << e.what() << "\n\n" << app.help();
    return 1;
  }

  try {
    if (sim->parsed()) return cmd_simulate(sim_args);
    if (gen->parsed()) return cmd_generate(gen_args);
    if (hm->parsed()) return cmd_history_match(hm_args);
    if (fit->parsed()) return cmd_fit(fit_args, fit_resume, fit_halt_after);
    if (sum->parsed()) return cmd_summarize(sum_args, sum_samples);
    if (res->parsed()) return cmd_residuals(res_args, res_samples);
    if (val->parsed()) return cmd_validate(val_args, val_quick);
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "runtime failure: " << e.what() << '\n';
    return 2;
  }
  return 1;
}
