#include "ssfit/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "ssfit/config.hpp"
#include "ssfit/dataset.hpp"
#include "ssfit/errors.hpp"
#include "ssfit/parallel.hpp"
#include "ssfit/version.hpp"

namespace ssfit {

namespace {
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string na(double v) { return std::isfinite(v) ? format_real(v) : "na"; }

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  require(static_cast<bool>(out), "cannot write file: " + path);
  return out;
}
}  // namespace

double quantile(std::vector<double> values, double p) {
  require(!values.empty(), "quantile: empty input");
  require(p >= 0.0 && p <= 1.0, "quantile: p outside [0,1]");
  std::sort(values.begin(), values.end());
  const double h = (values.size() - 1) * p;
  const std::size_t lo = static_cast<std::size_t>(h);
  if (lo + 1 >= values.size()) return values.back();
  return values[lo] + (h - lo) * (values[lo + 1] - values[lo]);
}

double effective_sample_size(const std::vector<double>& chain) {
  const std::size_t n = chain.size();
  if (n < 2) return kNaN;
  double mean = 0.0;
  for (double v : chain) mean += v;
  mean /= n;

  auto gamma = [&](std::size_t k) {
    double s = 0.0;
    for (std::size_t i = 0; i + k < n; ++i) s += (chain[i] - mean) * (chain[i + k] - mean);
    return s / n;
  };

  const double g0 = gamma(0);
  if (!(g0 > 0.0)) return kNaN;

  double total = 0.0;
  double prev = std::numeric_limits<double>::infinity();
  for (std::size_t m = 0; 2 * m + 1 < n; ++m) {
    double pair = gamma(2 * m) + gamma(2 * m + 1);
    if (pair <= 0.0) break;
    pair = std::min(pair, prev);
    total += pair;
    prev = pair;
  }
  double var_of_mean_scaled = -g0 + 2.0 * total;
  if (var_of_mean_scaled <= 0.0) var_of_mean_scaled = g0;
  return n * g0 / var_of_mean_scaled;
}

double lag1_autocorrelation(const std::vector<double>& values) {
  const std::size_t n = values.size();
  if (n < 2) return kNaN;
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= n;
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    den += (values[i] - mean) * (values[i] - mean);
    if (i + 1 < n) num += (values[i] - mean) * (values[i + 1] - mean);
  }
  if (!(den > 0.0)) return kNaN;
  return num / den;
}

int SampleMatrix::column(const std::string& name) const {
  for (std::size_t c = 0; c < columns.size(); ++c)
    if (columns[c] == name) return static_cast<int>(c);
  return -1;
}

std::vector<double> SampleMatrix::column_values(int c) const {
  std::vector<double> out;
  out.reserve(rows.size());
  for (const auto& r : rows) out.push_back(r[c]);
  return out;
}

SampleMatrix load_samples(const std::string& path) {
  std::ifstream in(path);
  require(static_cast<bool>(in), "cannot open samples file: " + path);
  SampleMatrix m;
  std::string line;
  require(static_cast<bool>(std::getline(in, line)), path + ": empty file");
  {
    std::istringstream ss(line);
    std::string item;
    while (std::getline(ss, item, ',')) m.columns.push_back(item);
  }
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<double> row;
    row.reserve(m.columns.size());
    std::istringstream ss(line);
    std::string item;
    while (std::getline(ss, item, ',')) row.push_back(parse_real(item, path));
    require(row.size() == m.columns.size(),
            path + ":" + std::to_string(lineno) + ": wrong field count");
    m.rows.push_back(std::move(row));
  }
  return m;
}

ParameterVector params_from_row(const std::vector<double>& row, int n_species, int n_years,
                                const std::vector<char>& fixed_c) {
  ParameterVector pv;
  std::size_t k = 0;
  pv.ln_kappa = row[k++];
  pv.ln_rmax.assign(row.begin() + k, row.begin() + k + n_species);
  k += n_species;
  pv.phi0.assign(row.begin() + k, row.begin() + k + n_species);
  k += n_species;
  pv.phi = PhiMatrix(n_years, n_species);
  std::copy(row.begin() + k, row.begin() + k + pv.phi.v.size(), pv.phi.v.begin());
  k += pv.phi.v.size();
  pv.variances.sigma2_c.assign(row.begin() + k, row.begin() + k + n_species);
  k += n_species;
  pv.variances.sigma2_s.assign(row.begin() + k, row.begin() + k + n_species);
  pv.variances.fixed_c = fixed_c;
  return pv;
}

SummaryFiles summarize_samples(const ModelBundle& bundle, const SampleMatrix& samples,
                               const std::string& out_dir, const SummaryOptions& options,
                               const std::string& config_hash, std::uint64_t seed) {
  require(samples.n_rows() >= 2, "summarize: need at least 2 post-burn-in samples");
  std::filesystem::create_directories(out_dir);

  SummaryFiles files;
  files.parameter_summary = out_dir + "/parameter_summary.csv";
  files.catch_quantiles = out_dir + "/catch_quantiles.csv";
  files.ssb_quantiles = out_dir + "/ssb_quantiles.csv";
  files.manifest = out_dir + "/summary_manifest.json";

  {
    auto out = open_out(files.parameter_summary);
    out << "parameter,median,p10,p90,ess\n";
    for (std::size_t c = 0; c < samples.columns.size(); ++c) {
      const auto v = samples.column_values(static_cast<int>(c));
      const double med = quantile(v, 0.5);
      const double p10 = quantile(v, 0.1);
      const double p90 = quantile(v, 0.9);
      require(p10 <= med && med <= p90, "summary: quantiles out of order");
      out << samples.columns[c] << ',' << format_real(med) << ',' << format_real(p10) << ','
          << format_real(p90) << ',' << na(effective_sample_size(v)) << '\n';
    }
  }

  // Catch and SSB bands from trajectories at an evenly spaced subset of the
  // stored samples.
  const int n_used = std::min(options.max_trajectories, samples.n_rows());
  std::vector<int> picks(n_used);
  for (int j = 0; j < n_used; ++j)
    picks[j] = static_cast<int>(static_cast<long>(j) * samples.n_rows() / n_used);

  const int T = bundle.n_years, S = bundle.n_species();
  std::vector<std::vector<double>> comm(static_cast<std::size_t>(T) * S),
      surv(static_cast<std::size_t>(T) * S), ssb(static_cast<std::size_t>(T) * S);
  for (auto& v : comm) v.resize(n_used);
  for (auto& v : surv) v.resize(n_used);
  for (auto& v : ssb) v.resize(n_used);

  parallel_for(n_used, options.threads, [&](int j) {
    const ParameterVector pv =
        params_from_row(samples.rows[picks[j]], S, T, bundle.fixed_sigma2_c);
    const SimulationRun run = simulate_point(bundle, pv);
    for (int t = 1; t <= T; ++t) {
      const auto& c = run.trajectory.catches[t - 1];
      const auto sb = bundle.model->ssb(run.trajectory.states[t - 1]);
      for (int sp = 0; sp < S; ++sp) {
        const std::size_t k = static_cast<std::size_t>(t - 1) * S + sp;
        comm[k][j] = c.commercial[sp];
        surv[k][j] = c.survey[sp];
        ssb[k][j] = sb[sp];
      }
    }
  });

  auto write_bands = [&](const std::string& path, const char* value_name,
                         const std::vector<std::vector<double>>& comm_or_ssb,
                         const std::vector<std::vector<double>>* survey) {
    auto out = open_out(path);
    out << "year,species," << value_name << "_median," << value_name << "_p10," << value_name
        << "_p90";
    if (survey) out << ",survey_median,survey_p10,survey_p90";
    out << '\n';
    for (int t = 1; t <= T; ++t)
      for (int sp = 0; sp < S; ++sp) {
        const std::size_t k = static_cast<std::size_t>(t - 1) * S + sp;
        out << t << ',' << bundle.species_names[sp] << ','
            << format_real(quantile(comm_or_ssb[k], 0.5)) << ','
            << format_real(quantile(comm_or_ssb[k], 0.1)) << ','
            << format_real(quantile(comm_or_ssb[k], 0.9));
        if (survey)
          out << ',' << format_real(quantile((*survey)[k], 0.5)) << ','
              << format_real(quantile((*survey)[k], 0.1)) << ','
              << format_real(quantile((*survey)[k], 0.9));
        out << '\n';
      }
  };
  write_bands(files.catch_quantiles, "commercial", comm, &surv);
  write_bands(files.ssb_quantiles, "ssb", ssb, nullptr);

  nlohmann::json manifest;
  manifest["code_version"] = kVersion;
  manifest["config_hash"] = config_hash;
  manifest["seed"] = seed;
  manifest["samples_used_for_bands"] = n_used;
  manifest["files"] = {{"parameter_summary", files.parameter_summary},
                       {"catch_quantiles", files.catch_quantiles},
                       {"ssb_quantiles", files.ssb_quantiles}};
  open_out(files.manifest) << manifest.dump(2) << '\n';
  return files;
}

ResidualFiles residual_check(const ModelBundle& bundle, const SampleMatrix& samples,
                             const ObservationSet& obs, const std::string& out_dir,
                             const std::string& config_hash, std::uint64_t seed) {
  require(samples.n_rows() >= 1, "residuals: need at least 1 sample");
  std::filesystem::create_directories(out_dir);

  const int S = bundle.n_species(), T = bundle.n_years;

  // Posterior-median parameter point, column by column.
  std::vector<double> median_row(samples.columns.size());
  for (std::size_t c = 0; c < samples.columns.size(); ++c)
    median_row[c] = quantile(samples.column_values(static_cast<int>(c)), 0.5);
  const ParameterVector pv = params_from_row(median_row, S, T, bundle.fixed_sigma2_c);

  const SimulationRun run = simulate_point(bundle, pv);

  ResidualFiles files;
  files.residuals = out_dir + "/residuals.csv";
  files.summary = out_dir + "/residual_summary.csv";
  files.manifest = out_dir + "/residual_manifest.json";

  std::vector<std::vector<double>> res_c(S), res_s(S);
  {
    auto out = open_out(files.residuals);
    out << "year,species,channel,std_residual\n";
    for (int t = 1; t <= T; ++t) {
      const auto& c = run.trajectory.catches[t - 1];
      for (int sp = 0; sp < S; ++sp) {
        if (obs.has_w(t, sp) && c.commercial[sp] > 0.0) {
          const double r = (std::log(obs.w_at(t, sp)) - std::log(c.commercial[sp])) /
                           std::sqrt(pv.variances.sigma2_c[sp]);
          res_c[sp].push_back(r);
          out << t << ',' << bundle.species_names[sp] << ",commercial," << format_real(r) << '\n';
        }
        if (t >= obs.first_survey_year && obs.has_z(t, sp) && c.survey[sp] > 0.0) {
          const double r = (std::log(obs.z_at(t, sp)) - std::log(c.survey[sp])) /
                           std::sqrt(pv.variances.sigma2_s[sp]);
          res_s[sp].push_back(r);
          out << t << ',' << bundle.species_names[sp] << ",survey," << format_real(r) << '\n';
        }
      }
    }
  }

  {
    auto out = open_out(files.summary);
    out << "species,channel,n,lag1_autocorr,white\n";
    for (int sp = 0; sp < S; ++sp) {
      for (int ch = 0; ch < 2; ++ch) {
        const auto& r = ch == 0 ? res_c[sp] : res_s[sp];
        const double rho = lag1_autocorrelation(r);
        std::string white = "na";
        if (std::isfinite(rho))
          white = std::abs(rho) > 2.0 / std::sqrt(static_cast<double>(r.size())) ? "0" : "1";
        out << bundle.species_names[sp] << ',' << (ch == 0 ? "commercial" : "survey") << ','
            << r.size() << ',' << na(rho) << ',' << white << '\n';
      }
    }
  }

  nlohmann::json manifest;
  manifest["code_version"] = kVersion;
  manifest["config_hash"] = config_hash;
  manifest["seed"] = seed;
  manifest["files"] = {{"residuals", files.residuals}, {"residual_summary", files.summary}};
  open_out(files.manifest) << manifest.dump(2) << '\n';
  return files;
}

}  // namespace ssfit
