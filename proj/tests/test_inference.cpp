#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "ssfit/dataset.hpp"
#include "ssfit/errors.hpp"
#include "ssfit/diagnostics.hpp"
#include "ssfit/fit.hpp"
#include "ssfit/history_match.hpp"
#include "ssfit/sweep.hpp"
#include "ssfit/tables.hpp"

using namespace ssfit;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// A config pointing at the shipped toy data but with tiny iteration counts.
Config small_fit_config(int iterations, int burn_in) {
  Config cfg = Config::parse_file("data/toy3/toy3.cfg");
  cfg.set_int("fit.iterations", iterations);
  cfg.set_int("fit.burn_in", burn_in);
  cfg.set_int("fit.checkpoint_every", 3);
  cfg.set_int("hm.points_per_wave", 24);
  cfg.set_int("hm.waves", 1);
  cfg.set_int("pilot.rounds", 1);
  cfg.set_int("pilot.iterations", 2);
  return cfg;
}

std::string temp_dir(const std::string& tag) {
  const auto p = std::filesystem::temp_directory_path() / ("ssfit_inf_" + tag);
  std::filesystem::remove_all(p);
  return p.string();
}

}  // namespace

TEST_CASE("identical fits are byte-identical, independent of thread count") {
  const Config cfg = small_fit_config(8, 2);
  FitOptions opt;
  opt.seed = 42;
  opt.output_dir = temp_dir("det_a");
  opt.threads = 1;
  const FitResult a = run_fit(cfg, "data/toy3", opt);

  opt.output_dir = temp_dir("det_b");
  opt.threads = 2;
  const FitResult b = run_fit(cfg, "data/toy3", opt);

  CHECK(slurp(a.samples_path) == slurp(b.samples_path));
  CHECK(slurp(a.samples_path).size() > 100);

  std::filesystem::remove_all(a.samples_path.substr(0, a.samples_path.rfind('/')));
  std::filesystem::remove_all(b.samples_path.substr(0, b.samples_path.rfind('/')));
}

TEST_CASE("different seeds change the chain") {
  const Config cfg = small_fit_config(6, 2);
  FitOptions opt;
  opt.threads = 2;
  opt.seed = 1;
  opt.output_dir = temp_dir("seed_a");
  const FitResult a = run_fit(cfg, "data/toy3", opt);
  opt.seed = 2;
  opt.output_dir = temp_dir("seed_b");
  const FitResult b = run_fit(cfg, "data/toy3", opt);
  CHECK(slurp(a.samples_path) != slurp(b.samples_path));
  std::filesystem::remove_all(a.samples_path.substr(0, a.samples_path.rfind('/')));
  std::filesystem::remove_all(b.samples_path.substr(0, b.samples_path.rfind('/')));
}

TEST_CASE("checkpoint resume reproduces an uninterrupted run byte for byte") {
  const Config cfg = small_fit_config(10, 0);
  FitOptions opt;
  opt.seed = 9;
  opt.threads = 2;

  opt.output_dir = temp_dir("resume_full");
  const FitResult full = run_fit(cfg, "data/toy3", opt);

  opt.output_dir = temp_dir("resume_half");
  opt.halt_after = 4;
  const FitResult half = run_fit(cfg, "data/toy3", opt);
  CHECK(half.iterations_done == 4);

  FitOptions resume = opt;
  resume.halt_after = 0;
  resume.resume = true;
  const FitResult done = run_fit(cfg, "data/toy3", resume);
  CHECK(done.iterations_done == 10);

  CHECK(slurp(full.samples_path) == slurp(done.samples_path));
  std::filesystem::remove_all(full.samples_path.substr(0, full.samples_path.rfind('/')));
  std::filesystem::remove_all(done.samples_path.substr(0, done.samples_path.rfind('/')));
}

TEST_CASE("resume refuses a mismatched config") {
  const Config cfg = small_fit_config(6, 0);
  FitOptions opt;
  opt.seed = 5;
  opt.threads = 2;
  opt.output_dir = temp_dir("resume_guard");
  opt.halt_after = 2;
  run_fit(cfg, "data/toy3", opt);

  Config other = cfg;
  other.set_int("fit.iterations", 7);
  FitOptions resume = opt;
  resume.halt_after = 0;
  resume.resume = true;
  CHECK_THROWS_WITH_AS(run_fit(other, "data/toy3", resume), doctest::Contains("config hash"),
                       ValidationError);
  std::filesystem::remove_all(opt.output_dir);
}

TEST_CASE("prefetched and sequential step-2 execution give the same chain") {
  Config cfg = small_fit_config(6, 0);
  cfg.set("sweep.pda_prefetch", "false");
  FitOptions opt;
  opt.seed = 17;
  opt.threads = 2;
  opt.output_dir = temp_dir("seq");
  const FitResult seq = run_fit(cfg, "data/toy3", opt);

  cfg.set("sweep.pda_prefetch", "true");
  opt.output_dir = temp_dir("pre");
  const FitResult pre = run_fit(cfg, "data/toy3", opt);

  // identical chains: prefetching is an execution strategy, not a kernel change
  const std::string a = slurp(seq.samples_path);
  std::string b = slurp(pre.samples_path);
  CHECK(a.substr(a.find('\n')) == b.substr(b.find('\n')));  // same rows (same header too)
  std::filesystem::remove_all(seq.samples_path.substr(0, seq.samples_path.rfind('/')));
  std::filesystem::remove_all(pre.samples_path.substr(0, pre.samples_path.rfind('/')));
}

TEST_CASE("burn-in consuming every iteration leaves an empty posterior file") {
  const Config cfg = small_fit_config(4, 4);
  FitOptions opt;
  opt.seed = 3;
  opt.threads = 2;
  opt.output_dir = temp_dir("allburn");
  const FitResult res = run_fit(cfg, "data/toy3", opt);
  const std::string samples = slurp(res.samples_path);
  CHECK(samples.find('\n') == samples.size() - 1);  // header only
  CHECK(std::filesystem::exists(res.manifest_path));
  std::filesystem::remove_all(opt.output_dir);
}

TEST_CASE("history matching: self-consistency and threshold behavior") {
  const Config cfg = Config::parse_file("data/toy3/toy3.cfg");
  const ModelBundle bundle = build_model_bundle(cfg, "data/toy3");
  ParameterVector truth = truth_from_config(cfg, bundle);

  // noise-free observations generated at the truth: implausibility 0 there
  ParameterVector clean = truth;
  std::fill(clean.variances.sigma2_c.begin(), clean.variances.sigma2_c.end(), 0.0);
  std::fill(clean.variances.sigma2_s.begin(), clean.variances.sigma2_s.end(), 0.0);
  const ObservationSet obs = generate_synthetic(bundle, clean, 31);
  CHECK(implausibility(bundle, obs, truth, 1.0, 1.0) < 1e-9);

  // threshold = infinity keeps every sampled point
  HistoryMatchConfig hm;
  hm.waves = 1;
  hm.points_per_wave = 20;
  hm.threshold = std::numeric_limits<double>::infinity();
  hm.condition_rates = false;
  const HistoryMatchResult all = history_match(bundle, obs, hm, 1, 2);
  CHECK(static_cast<int>(all.survivors.size()) == 20);
}

TEST_CASE("history matching survivors dominate rejected points in likelihood") {
  const Config cfg = Config::parse_file("data/toy3/toy3.cfg");
  const ModelBundle bundle = build_model_bundle(cfg, "data/toy3");
  const ObservationSet obs = load_observations("data/toy3/observations.csv",
                                               bundle.species_names, 10, 3);
  FitEvaluator ev(bundle, obs);

  HistoryMatchConfig hm;
  hm.waves = 1;
  hm.points_per_wave = 60;
  hm.threshold = 3.0;
  const HistoryMatchResult res = history_match(bundle, obs, hm, 7, 2);
  REQUIRE(!res.survivors.empty());

  // compare survivor logliks against fresh prior draws evaluated the same way
  std::vector<double> survivor_ll, reject_ll;
  for (std::size_t i = 0; i < std::min<std::size_t>(res.survivors.size(), 20); ++i)
    survivor_ll.push_back(ev.loglik(res.survivors[i].pv));
  HistoryMatchConfig loose = hm;
  loose.threshold = std::numeric_limits<double>::infinity();
  loose.points_per_wave = 20;
  loose.condition_rates = false;
  for (const auto& p : history_match(bundle, obs, loose, 99, 2).survivors)
    reject_ll.push_back(ev.loglik(p.pv));

  CHECK(quantile(survivor_ll, 0.5) > quantile(reject_ll, 0.5));
}

TEST_CASE("pilot tuning raises saturated scales and leaves in-band scales alone") {
  const Config cfg = Config::parse_file("data/toy3/toy3.cfg");
  const ModelBundle bundle = build_model_bundle(cfg, "data/toy3");
  const ObservationSet obs = load_observations("data/toy3/observations.csv",
                                               bundle.species_names, 10, 3);
  FitEvaluator ev(bundle, obs);
  const ParameterVector start =
      condition_rates_on_catches(bundle, obs, truth_from_config(cfg, bundle));
  ChainState state = init_chain_state(ev, start);

  SweepPlan plan = sweep_plan_from_config(cfg);
  plan.scale_lnrmax = 1e-6;  // absurdly small: inner acceptance saturates at 1
  plan.scale_phi0 = 1e-6;
  PilotBands bands;
  const SweepPlan tuned = pilot_tune(state, plan, ev, 13, 1, 6, bands, 2);
  CHECK(tuned.scale_lnrmax > plan.scale_lnrmax);
}

TEST_CASE("rate conditioning tracks the observed catches") {
  const Config cfg = Config::parse_file("data/toy3/toy3.cfg");
  const ModelBundle bundle = build_model_bundle(cfg, "data/toy3");
  const ObservationSet obs = load_observations("data/toy3/observations.csv",
                                               bundle.species_names, 10, 3);
  ParameterVector pv = truth_from_config(cfg, bundle);
  for (auto& v : pv.phi.v) v = 0.9;  // scramble the rates

  const ParameterVector cond = condition_rates_on_catches(bundle, obs, pv);
  const SimulationRun run = simulate_point(bundle, cond);
  int close = 0, total = 0;
  for (int t = 1; t <= 10; ++t)
    for (int sp = 0; sp < 3; ++sp)
      if (obs.has_w(t, sp)) {
        ++total;
        const double rel =
            std::abs(run.trajectory.catches[t - 1].commercial[sp] / obs.w_at(t, sp) - 1.0);
        close += rel < 0.05;
      }
  CHECK(close > total * 0.8);  // most catches matched (clamped rates excepted)
}
