#include "ssfit/fit.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "ssfit/errors.hpp"
#include "ssfit/history_match.hpp"
#include "ssfit/tables.hpp"
#include "ssfit/version.hpp"

namespace ssfit {

namespace {

using nlohmann::json;

std::string double_hex(double v) {
  std::uint64_t u;
  std::memcpy(&u, &v, sizeof(u));
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(u));
  return buf;
}

double hex_double(const std::string& s) {
  require(s.size() == 16, "checkpoint: bad double encoding");
  const std::uint64_t u = std::stoull(s, nullptr, 16);
  double v;
  std::memcpy(&v, &u, sizeof(v));
  return v;
}

json doubles_to_json(const std::vector<double>& v) {
  json out = json::array();
  for (double x : v) out.push_back(double_hex(x));
  return out;
}

std::vector<double> doubles_from_json(const json& j) {
  std::vector<double> out;
  for (const auto& s : j) out.push_back(hex_double(s.get<std::string>()));
  return out;
}

json point_to_json(const ParameterVector& pv) {
  json out;
  out["ln_kappa"] = double_hex(pv.ln_kappa);
  out["ln_rmax"] = doubles_to_json(pv.ln_rmax);
  out["phi0"] = doubles_to_json(pv.phi0);
  out["phi"] = doubles_to_json(pv.phi.v);
  out["sigma2_c"] = doubles_to_json(pv.variances.sigma2_c);
  out["sigma2_s"] = doubles_to_json(pv.variances.sigma2_s);
  return out;
}

ParameterVector point_from_json(const json& j, int n_species, int n_years,
                                const std::vector<char>& fixed_c) {
  ParameterVector pv;
  pv.ln_kappa = hex_double(j.at("ln_kappa").get<std::string>());
  pv.ln_rmax = doubles_from_json(j.at("ln_rmax"));
  pv.phi0 = doubles_from_json(j.at("phi0"));
  pv.phi = PhiMatrix(n_years, n_species);
  pv.phi.v = doubles_from_json(j.at("phi"));
  pv.variances.sigma2_c = doubles_from_json(j.at("sigma2_c"));
  pv.variances.sigma2_s = doubles_from_json(j.at("sigma2_s"));
  pv.variances.fixed_c = fixed_c;
  require(static_cast<int>(pv.ln_rmax.size()) == n_species &&
              pv.phi.v.size() == static_cast<std::size_t>(n_years) * n_species,
          "checkpoint: point shape mismatch");
  return pv;
}

json plan_to_json(const SweepPlan& plan) {
  json out;
  out["scale_lnrmax"] = double_hex(plan.scale_lnrmax);
  out["scale_phi0"] = double_hex(plan.scale_phi0);
  out["scale_phi"] = double_hex(plan.scale_phi);
  out["pda_outer_steps"] = plan.pda_outer_steps;
  out["pda_subset_years"] = plan.pda_subset_years;
  out["pda_prefetch"] = plan.pda_prefetch;
  out["calderhead_proposals"] = plan.calderhead_proposals;
  out["scale_lnkappa"] = double_hex(plan.scale_lnkappa);
  out["scale_cal_lnrmax"] = double_hex(plan.scale_cal_lnrmax);
  out["cal_ridge_scale"] = double_hex(plan.cal_ridge_scale);
  out["random_step_order"] = plan.random_step_order;
  return out;
}

SweepPlan plan_from_json(const json& j) {
  SweepPlan plan;
  plan.scale_lnrmax = hex_double(j.at("scale_lnrmax").get<std::string>());
  plan.scale_phi0 = hex_double(j.at("scale_phi0").get<std::string>());
  plan.scale_phi = hex_double(j.at("scale_phi").get<std::string>());
  plan.pda_outer_steps = j.at("pda_outer_steps").get<int>();
  plan.pda_subset_years = j.at("pda_subset_years").get<int>();
  plan.pda_prefetch = j.at("pda_prefetch").get<bool>();
  plan.calderhead_proposals = j.at("calderhead_proposals").get<int>();
  plan.scale_lnkappa = hex_double(j.at("scale_lnkappa").get<std::string>());
  plan.scale_cal_lnrmax = hex_double(j.at("scale_cal_lnrmax").get<std::string>());
  plan.cal_ridge_scale = hex_double(j.at("cal_ridge_scale").get<std::string>());
  plan.random_step_order = j.at("random_step_order").get<bool>();
  return plan;
}

struct RunningStats {
  long step1_outer = 0, step2_outer = 0, step3_moved = 0, runs = 0;
  long iterations = 0;

  json to_json() const {
    return json{{"step1_outer", step1_outer},
                {"step2_outer", step2_outer},
                {"step3_moved", step3_moved},
                {"model_runs", runs},
                {"iterations", iterations}};
  }
  static RunningStats from_json(const json& j) {
    RunningStats s;
    s.step1_outer = j.at("step1_outer").get<long>();
    s.step2_outer = j.at("step2_outer").get<long>();
    s.step3_moved = j.at("step3_moved").get<long>();
    s.runs = j.at("model_runs").get<long>();
    s.iterations = j.at("iterations").get<long>();
    return s;
  }
};

}  // namespace

FitResult run_fit(const Config& cfg, const std::string& base_dir, const FitOptions& options) {
  require(!options.output_dir.empty(), "fit: output directory required");
  std::filesystem::create_directories(options.output_dir);

  const ModelBundle bundle = build_model_bundle(cfg, base_dir);
  const ObservationSet obs =
      load_observations(join_path(base_dir, cfg.get_string("data.observations")),
                        bundle.species_names, bundle.n_years, bundle.first_survey_year);
  FitEvaluator evaluator(bundle, obs);

  const int iterations = static_cast<int>(cfg.get_int("fit.iterations"));
  const int burn_in = static_cast<int>(cfg.get_int("fit.burn_in", iterations / 2));
  const int thinning = static_cast<int>(cfg.get_int("fit.thinning", 1));
  const int checkpoint_every = static_cast<int>(cfg.get_int("fit.checkpoint_every", 50));
  require(iterations >= 1 && burn_in >= 0 && burn_in <= iterations, "fit: bad iteration counts");
  require(thinning >= 1, "fit: thinning must be >= 1");

  FitResult result;
  result.samples_path = options.output_dir + "/samples.csv";
  result.runlog_path = options.output_dir + "/runlog.jsonl";
  result.checkpoint_path = options.output_dir + "/checkpoint.json";
  result.manifest_path = options.output_dir + "/manifest.json";
  result.iterations_requested = iterations;

  const std::string config_hash = cfg.hash();

  ChainState state;
  SweepPlan plan;
  RunningStats stats;
  int start_iteration = 0;
  std::streamoff samples_offset = 0;

  if (options.resume) {
    std::ifstream in(result.checkpoint_path);
    require(static_cast<bool>(in), "resume: cannot open " + result.checkpoint_path);
    json ck = json::parse(in);
    require(ck.at("format").get<int>() == 1, "resume: unknown checkpoint format");
    require(ck.at("config_hash").get<std::string>() == config_hash,
            "resume: config hash mismatch (" + ck.at("config_hash").get<std::string>() + " vs " +
                config_hash + ")");
    require(ck.at("seed").get<std::uint64_t>() == options.seed, "resume: seed mismatch");
    start_iteration = ck.at("iteration").get<int>();
    samples_offset = ck.at("samples_offset").get<std::streamoff>();
    plan = plan_from_json(ck.at("plan"));
    stats = RunningStats::from_json(ck.at("stats"));
    const ParameterVector pv = point_from_json(ck.at("point"), bundle.n_species(),
                                               bundle.n_years, bundle.fixed_sigma2_c);
    state = init_chain_state(evaluator, pv);

    // Trim anything written after the checkpointed offset.
    std::filesystem::resize_file(result.samples_path, static_cast<std::uintmax_t>(samples_offset));
  } else {
    // Starting point: explicit parameter file, or history matching.
    ParameterVector start;
    if (cfg.has("fit.start_params")) {
      start = load_parameter_file(join_path(base_dir, cfg.get_string("fit.start_params")),
                                  bundle.n_species(), bundle.n_years, bundle.fixed_sigma2_c);
      for (int i = 0; i < bundle.n_species(); ++i)
        if (bundle.fixed_sigma2_c[i]) start.variances.sigma2_c[i] = bundle.fixed_sigma2_c_value[i];
    } else {
      HistoryMatchConfig hm;
      hm.waves = static_cast<int>(cfg.get_int("hm.waves", 2));
      hm.points_per_wave = static_cast<int>(cfg.get_int("hm.points_per_wave", 150));
      hm.threshold = cfg.get_real("hm.threshold", 3.0);
      hm.discrepancy_var = cfg.get_real("hm.discrepancy_var", 0.0);
      hm.condition_rates = cfg.get_bool("hm.condition_rates", true);
      const HistoryMatchResult hmres =
          history_match(bundle, obs, hm, options.seed, options.threads);
      require(!hmres.survivors.empty(), "fit: history matching found no usable points");
      // Start from the best-likelihood point among the most plausible
      // survivors rather than the single implausibility winner.
      const int candidates = std::min<int>(
          static_cast<int>(cfg.get_int("hm.start_candidates", 10)),
          static_cast<int>(hmres.survivors.size()));
      bool found = false;
      double best = -std::numeric_limits<double>::infinity();
      for (int j = 0; j < candidates; ++j) {
        ParameterVector pv = hmres.survivors[j].pv;
        const double ll = evaluator.loglik(pv);
        if (std::isfinite(ll) && std::isfinite(log_prior(pv, bundle.prior)) && ll > best) {
          best = ll;
          start = pv;
          found = true;
        }
      }
      require(found, "fit: no history-matching survivor has a finite posterior");
    }
    state = init_chain_state(evaluator, start);

    plan = sweep_plan_from_config(cfg);
    if (cfg.get_bool("pilot.enable", true)) {
      PilotBands bands;
      bands.inner_lo = cfg.get_real("pilot.inner_lo", bands.inner_lo);
      bands.inner_hi = cfg.get_real("pilot.inner_hi", bands.inner_hi);
      bands.outer_lo = cfg.get_real("pilot.outer_lo", bands.outer_lo);
      bands.outer_hi = cfg.get_real("pilot.outer_hi", bands.outer_hi);
      plan = pilot_tune(state, plan, evaluator, options.seed,
                        static_cast<int>(cfg.get_int("pilot.rounds", 5)),
                        static_cast<int>(cfg.get_int("pilot.iterations", 20)), bands,
                        options.threads);
    }

    std::ofstream samples(result.samples_path, std::ios::trunc);
    require(static_cast<bool>(samples), "fit: cannot write " + result.samples_path);
    const auto header = parameter_header(bundle.species_names, bundle.n_years);
    for (std::size_t i = 0; i < header.size(); ++i) samples << (i ? "," : "") << header[i];
    samples << '\n';
    samples.flush();
    samples_offset = samples.tellp();

    std::ofstream(result.runlog_path, std::ios::trunc);
  }

  std::fstream samples(result.samples_path, std::ios::in | std::ios::out);
  require(static_cast<bool>(samples), "fit: cannot append to " + result.samples_path);
  samples.seekp(samples_offset);
  std::ofstream runlog(result.runlog_path, std::ios::app);

  auto write_checkpoint = [&](int iteration) {
    samples.flush();
    json ck;
    ck["format"] = 1;
    ck["code_version"] = kVersion;
    ck["config_hash"] = config_hash;
    ck["seed"] = options.seed;
    ck["iteration"] = iteration;
    ck["samples_offset"] = static_cast<std::streamoff>(samples.tellp());
    ck["plan"] = plan_to_json(plan);
    ck["point"] = point_to_json(state.pv);
    ck["stats"] = stats.to_json();
    const std::string tmp = result.checkpoint_path + ".tmp";
    std::ofstream out(tmp, std::ios::trunc);
    out << ck.dump(2) << '\n';
    out.close();
    std::filesystem::rename(tmp, result.checkpoint_path);
  };

  for (int iter = start_iteration + 1; iter <= iterations; ++iter) {
    const auto t0 = std::chrono::steady_clock::now();
    const RngStream base(options.seed, {0x17e2u, static_cast<std::uint64_t>(iter)});
    const SweepStats s = sweep_iteration(state, plan, evaluator, base, options.threads);
    const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                        std::chrono::steady_clock::now() - t0)
                        .count();

    stats.iterations += 1;
    stats.step1_outer += s.step1_outer;
    stats.step2_outer += s.step2_outer_accepts;
    stats.step3_moved += s.step3_moved;
    stats.runs += s.runs;

    require(std::isfinite(state.log_post()), "fit: chain reached a non-finite posterior");
    if (iter > burn_in && (iter - burn_in - 1) % thinning == 0) {
      samples << format_parameter_row(state.pv, state.log_post()) << '\n';
    }

    json rec;
    rec["iteration"] = iter;
    rec["log_post"] = state.log_post();
    rec["step1_outer"] = s.step1_outer;
    rec["step1_inner_accepts"] = s.step1_inner_accepts;
    rec["step2_outer_accepts"] = s.step2_outer_accepts;
    rec["step2_inner_accepts"] = s.step2_inner_accepts;
    rec["step3_moved"] = s.step3_moved;
    rec["model_runs"] = s.runs;
    rec["wall_ms"] = ms;
    runlog << rec.dump() << '\n';

    result.iterations_done = iter;
    if (iter % checkpoint_every == 0 || iter == iterations) write_checkpoint(iter);
    if (options.halt_after > 0 && iter - start_iteration >= options.halt_after &&
        iter < iterations) {
      write_checkpoint(iter);
      break;
    }
  }
  samples.flush();
  runlog.flush();

  json manifest;
  manifest["code_version"] = kVersion;
  manifest["config_hash"] = config_hash;
  manifest["seed"] = options.seed;
  manifest["iterations"] = result.iterations_done;
  manifest["burn_in"] = burn_in;
  manifest["thinning"] = thinning;
  manifest["acceptance"] = stats.to_json();
  manifest["files"] = {{"samples", result.samples_path},
                       {"runlog", result.runlog_path},
                       {"checkpoint", result.checkpoint_path}};
  std::ofstream(result.manifest_path, std::ios::trunc) << manifest.dump(2) << '\n';

  result.final_state = state;
  return result;
}

}  // namespace ssfit
