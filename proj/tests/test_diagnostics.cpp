#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "ssfit/dataset.hpp"
#include "ssfit/diagnostics.hpp"
#include "ssfit/errors.hpp"
#include "ssfit/rng.hpp"
#include "ssfit/tables.hpp"

using namespace ssfit;

TEST_CASE("quantile uses linear interpolation between order statistics") {
  std::vector<double> v;
  for (int i = 1; i <= 100; ++i) v.push_back(i);
  CHECK(quantile(v, 0.5) == doctest::Approx(50.5).epsilon(1e-14));
  CHECK(quantile(v, 0.1) == doctest::Approx(10.9).epsilon(1e-14));
  CHECK(quantile(v, 0.9) == doctest::Approx(90.1).epsilon(1e-14));
  CHECK(quantile(v, 0.0) == 1.0);
  CHECK(quantile(v, 1.0) == 100.0);

  // permutation invariance
  std::vector<double> shuffled = v;
  RngStream rng(3);
  for (int i = 99; i > 0; --i) std::swap(shuffled[i], shuffled[rng.uniform_int(i + 1)]);
  CHECK(quantile(shuffled, 0.37) == quantile(v, 0.37));
}

TEST_CASE("ess of independent draws is near the sample count") {
  RngStream rng(4);
  std::vector<double> chain(20000);
  for (auto& v : chain) v = rng.normal();
  const double ess = effective_sample_size(chain);
  CHECK(ess > 0.9 * chain.size());
  CHECK(ess < 1.1 * chain.size());
}

TEST_CASE("ess shrinks for an autocorrelated chain and degenerates for constants") {
  RngStream rng(5);
  std::vector<double> chain(20000);
  double x = 0.0;
  for (auto& v : chain) {
    x = 0.9 * x + rng.normal() * std::sqrt(1 - 0.81);
    v = x;
  }
  const double ess = effective_sample_size(chain);
  // AR(1) with rho = 0.9: ESS ~ n (1-rho)/(1+rho) = n/19
  CHECK(ess < 0.12 * chain.size());
  CHECK(ess > 0.02 * chain.size());

  std::vector<double> flat(100, 2.5);
  CHECK(std::isnan(effective_sample_size(flat)));
  CHECK(std::isnan(lag1_autocorrelation({1.0})));
}

TEST_CASE("residual whiteness flags behave under the null") {
  // white residuals: the |rho| > 2/sqrt(n) flag fires rarely
  RngStream rng(6);
  int flagged = 0;
  const int reps = 400, n = 30;
  for (int r = 0; r < reps; ++r) {
    std::vector<double> res(n);
    for (auto& v : res) v = rng.normal();
    const double rho = lag1_autocorrelation(res);
    if (std::abs(rho) > 2.0 / std::sqrt(static_cast<double>(n))) ++flagged;
  }
  CHECK(flagged < 0.05 * reps + 3 * std::sqrt(0.05 * reps));
}

namespace {
std::string make_samples_file(const ModelBundle& bundle, const std::string& dir,
                              const std::vector<ParameterVector>& points) {
  std::filesystem::create_directories(dir);
  const std::string path = dir + "/samples.csv";
  std::ofstream out(path);
  const auto header = parameter_header(bundle.species_names, bundle.n_years);
  for (std::size_t i = 0; i < header.size(); ++i) out << (i ? "," : "") << header[i];
  out << '\n';
  for (const auto& pv : points) out << format_parameter_row(pv, -1.0) << '\n';
  return path;
}
}  // namespace

TEST_CASE("summaries respect quantile ordering and degenerate chains") {
  const Config cfg = Config::parse_file("data/toy3/toy3.cfg");
  const ModelBundle bundle = build_model_bundle(cfg, "data/toy3");
  const ParameterVector truth = truth_from_config(cfg, bundle);

  const std::string dir =
      (std::filesystem::temp_directory_path() / "ssfit_diag_test").string();
  // all samples identical: p10 = median = p90, ESS reported as degenerate
  const std::string samples_path = make_samples_file(bundle, dir, {truth, truth, truth});
  const SampleMatrix samples = load_samples(samples_path);
  SummaryOptions opts;
  opts.max_trajectories = 3;
  const SummaryFiles files = summarize_samples(bundle, samples, dir, opts, "deadbeef", 1);

  std::ifstream in(files.parameter_summary);
  std::string line;
  std::getline(in, line);  // header
  bool saw_degenerate_ess = false;
  while (std::getline(in, line)) {
    const auto c1 = line.find(','), c2 = line.find(',', line.find(',') + 1);
    const auto c3 = line.find(',', c2 + 1);
    const auto c4 = line.find(',', c3 + 1);
    const double med = parse_real(line.substr(c1 + 1, c2 - c1 - 1), "t");
    const double p10 = parse_real(line.substr(c2 + 1, c3 - c2 - 1), "t");
    const double p90 = parse_real(line.substr(c3 + 1, c4 - c3 - 1), "t");
    CHECK(p10 <= med);
    CHECK(med <= p90);
    CHECK(p10 == p90);  // identical samples
    if (line.substr(c4 + 1) == "na") saw_degenerate_ess = true;
  }
  CHECK(saw_degenerate_ess);

  std::filesystem::remove_all(dir);
}

TEST_CASE("summarize requires at least two samples") {
  const Config cfg = Config::parse_file("data/toy3/toy3.cfg");
  const ModelBundle bundle = build_model_bundle(cfg, "data/toy3");
  const ParameterVector truth = truth_from_config(cfg, bundle);
  const std::string dir =
      (std::filesystem::temp_directory_path() / "ssfit_diag_test2").string();
  const std::string samples_path = make_samples_file(bundle, dir, {truth});
  const SampleMatrix samples = load_samples(samples_path);
  SummaryOptions opts;
  CHECK_THROWS_AS(summarize_samples(bundle, samples, dir, opts, "x", 1), ValidationError);
  std::filesystem::remove_all(dir);
}

TEST_CASE("residuals on perfectly fitted data are zero; single points lack autocorrelation") {
  const Config cfg = Config::parse_file("data/toy3/toy3.cfg");
  const ModelBundle bundle = build_model_bundle(cfg, "data/toy3");
  ParameterVector truth = truth_from_config(cfg, bundle);

  // observations equal to the model catches
  ParameterVector clean = truth;
  std::fill(clean.variances.sigma2_c.begin(), clean.variances.sigma2_c.end(), 0.0);
  std::fill(clean.variances.sigma2_s.begin(), clean.variances.sigma2_s.end(), 0.0);
  ObservationSet obs = generate_synthetic(bundle, clean, 3);

  // keep only year 1 for species "small": autocorrelation undefined there
  for (int t = 2; t <= bundle.n_years; ++t) obs.w_mask[obs.idx(t, 0)] = 0;

  const std::string dir =
      (std::filesystem::temp_directory_path() / "ssfit_diag_test3").string();
  const std::string samples_path = make_samples_file(bundle, dir, {truth, truth});
  const SampleMatrix samples = load_samples(samples_path);
  const ResidualFiles files = residual_check(bundle, samples, obs, dir, "x", 1);

  {
    std::ifstream in(files.residuals);
    std::string line;
    std::getline(in, line);
    while (std::getline(in, line)) {
      const double r = parse_real(line.substr(line.rfind(',') + 1), "resid");
      CHECK(std::abs(r) < 1e-9);
    }
  }
  {
    std::ifstream in(files.summary);
    std::string line;
    std::getline(in, line);
    bool saw_small_commercial_na = false;
    while (std::getline(in, line)) {
      if (line.rfind("small,commercial", 0) == 0) {
        CHECK(line.find(",1,") != std::string::npos);  // n = 1
        CHECK(line.find("na") != std::string::npos);   // autocorrelation missing
        saw_small_commercial_na = true;
      }
    }
    CHECK(saw_small_commercial_na);
  }
  std::filesystem::remove_all(dir);
}
