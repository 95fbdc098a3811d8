#include "ssfit/tables.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "ssfit/config.hpp"
#include "ssfit/errors.hpp"

namespace ssfit {

namespace {

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream ss(line);
  while (std::getline(ss, item, sep)) {
    if (!item.empty() && item.back() == '\r') item.pop_back();
    out.push_back(item);
  }
  if (!line.empty() && line.back() == sep) out.push_back("");
  return out;
}

class CsvReader {
public:
  explicit CsvReader(const std::string& path) : path_(path), in_(path) {
    require(static_cast<bool>(in_), "cannot open file: " + path);
    std::string header;
    require(static_cast<bool>(std::getline(in_, header)), path + ": empty file");
    columns_ = split(header, ',');
    for (std::size_t c = 0; c < columns_.size(); ++c) index_[columns_[c]] = c;
  }

  bool next() {
    while (std::getline(in_, line_)) {
      ++lineno_;
      if (line_.empty() || line_[0] == '#') continue;
      fields_ = split(line_, ',');
      require(fields_.size() == columns_.size(),
              where() + ": expected " + std::to_string(columns_.size()) + " fields, got " +
                  std::to_string(fields_.size()));
      return true;
    }
    return false;
  }

  bool has_column(const std::string& name) const { return index_.count(name) > 0; }

  std::string get(const std::string& column) const {
    auto it = index_.find(column);
    require(it != index_.end(), path_ + ": missing column '" + column + "'");
    return fields_[it->second];
  }

  std::optional<std::string> get_opt(const std::string& column) const {
    auto it = index_.find(column);
    if (it == index_.end()) return std::nullopt;
    const std::string& v = fields_[it->second];
    if (v.empty()) return std::nullopt;
    return v;
  }

  double real(const std::string& column) const { return parse_real(get(column), where()); }
  long integer(const std::string& column) const { return parse_int(get(column), where()); }
  std::optional<double> real_opt(const std::string& column) const {
    auto v = get_opt(column);
    if (!v) return std::nullopt;
    return parse_real(*v, where());
  }

  std::string where() const { return path_ + ":" + std::to_string(lineno_); }

private:
  std::string path_;
  std::ifstream in_;
  std::vector<std::string> columns_;
  std::map<std::string, std::size_t> index_;
  std::string line_;
  std::vector<std::string> fields_;
  int lineno_ = 1;
};

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  require(static_cast<bool>(out), "cannot write file: " + path);
  return out;
}

}  // namespace

std::vector<SpeciesRow> load_species_table(const std::string& path) {
  CsvReader csv(path);
  std::vector<SpeciesRow> rows;
  std::set<std::string> seen;
  while (csv.next()) {
    SpeciesRow row;
    row.name = csv.get("name");
    require(!row.name.empty(), csv.where() + ": empty species name");
    require(seen.insert(row.name).second, csv.where() + ": duplicate species '" + row.name + "'");
    row.w_egg = csv.real("w_egg");
    row.w_mat = csv.real("w_mat");
    row.w_inf = csv.real("w_inf");
    row.max_intake_coeff = csv.real("max_intake_coeff");
    row.intake_exponent = csv.real("intake_exponent");
    row.search_volume_coeff = csv.real_opt("search_volume_coeff");
    row.search_exponent = csv.real_opt("search_exponent").value_or(0.0);
    row.ppmr_location = csv.real_opt("ppmr_location").value_or(0.0);
    row.ppmr_width = csv.real_opt("ppmr_width").value_or(0.0);
    row.background_mortality = csv.real_opt("background_mortality");
    row.recruitment_efficiency = csv.real_opt("recruitment_efficiency").value_or(0.0);
    row.sel_w50 = csv.real_opt("sel_w50");
    row.sel_slope = csv.real_opt("sel_slope");
    row.survey_q = csv.real_opt("survey_q");
    row.survey_w50 = csv.real_opt("survey_w50");
    row.survey_slope = csv.real_opt("survey_slope");
    row.sigma2_c_fixed = csv.real_opt("sigma2_c_fixed");
    if (csv.has_column("w_masked")) {
      const std::string m = csv.get("w_masked");
      row.w_masked = m == "1" || m == "true" || m == "yes";
    }
    rows.push_back(std::move(row));
  }
  require(!rows.empty(), path + ": no species rows");
  return rows;
}

void write_species_table(const std::string& path, const std::vector<SpeciesRow>& rows) {
  auto out = open_out(path);
  out << "name,w_egg,w_mat,w_inf,max_intake_coeff,intake_exponent,search_volume_coeff,"
         "search_exponent,ppmr_location,ppmr_width,background_mortality,recruitment_efficiency,"
         "sel_w50,sel_slope,survey_q,survey_w50,survey_slope,sigma2_c_fixed,w_masked\n";
  auto opt = [](const std::optional<double>& v) { return v ? format_real(*v) : std::string(); };
  for (const auto& r : rows) {
    out << r.name << ',' << format_real(r.w_egg) << ',' << format_real(r.w_mat) << ','
        << format_real(r.w_inf) << ',' << format_real(r.max_intake_coeff) << ','
        << format_real(r.intake_exponent) << ',' << opt(r.search_volume_coeff) << ','
        << format_real(r.search_exponent) << ',' << format_real(r.ppmr_location) << ','
        << format_real(r.ppmr_width) << ',' << opt(r.background_mortality) << ','
        << format_real(r.recruitment_efficiency) << ',' << opt(r.sel_w50) << ','
        << opt(r.sel_slope) << ',' << opt(r.survey_q) << ',' << opt(r.survey_w50) << ','
        << opt(r.survey_slope) << ',' << opt(r.sigma2_c_fixed) << ','
        << (r.w_masked ? "1" : "0") << '\n';
  }
}

std::vector<double> load_survey_effort(const std::string& path, int n_years) {
  CsvReader csv(path);
  std::vector<double> effort(n_years, 0.0);
  std::set<long> seen;
  while (csv.next()) {
    const long year = csv.integer("year");
    require(year >= 1 && year <= n_years,
            csv.where() + ": year " + std::to_string(year) + " outside 1.." +
                std::to_string(n_years));
    require(seen.insert(year).second, csv.where() + ": duplicate year");
    const double e = csv.real("effort");
    require(e >= 0.0, csv.where() + ": negative effort");
    effort[year - 1] = e;
  }
  return effort;
}

void write_survey_effort(const std::string& path, const std::vector<double>& effort_by_year) {
  auto out = open_out(path);
  out << "year,effort\n";
  for (std::size_t t = 0; t < effort_by_year.size(); ++t) {
    if (effort_by_year[t] > 0.0)
      out << (t + 1) << ',' << format_real(effort_by_year[t]) << '\n';
  }
}

ObservationSet load_observations(const std::string& path, const std::vector<std::string>& species,
                                 int n_years, int first_survey_year) {
  CsvReader csv(path);
  ObservationSet obs = ObservationSet::empty(n_years, static_cast<int>(species.size()),
                                             first_survey_year);
  std::map<std::string, int> sp_index;
  for (std::size_t i = 0; i < species.size(); ++i) sp_index[species[i]] = static_cast<int>(i);

  bool any = false;
  std::set<std::string> seen;
  while (csv.next()) {
    any = true;
    const long year = csv.integer("year");
    const std::string name = csv.get("species");
    const std::string channel = csv.get("channel");
    const double value = csv.real("value");

    auto it = sp_index.find(name);
    require(it != sp_index.end(), csv.where() + ": unknown species '" + name + "'");
    require(year >= 1 && year <= n_years,
            csv.where() + ": year " + std::to_string(year) + " outside 1.." +
                std::to_string(n_years));
    require(value > 0.0, csv.where() + ": value must be > 0 (omit zero-catch records)");
    require(seen.insert(std::to_string(year) + "|" + name + "|" + channel).second,
            csv.where() + ": duplicate (year, species, channel) row");

    if (channel == "commercial") {
      obs.set_w(static_cast<int>(year), it->second, value);
    } else if (channel == "survey") {
      require(year >= first_survey_year,
              csv.where() + ": survey row before first survey year " +
                  std::to_string(first_survey_year));
      obs.set_z(static_cast<int>(year), it->second, value);
    } else {
      throw ValidationError(csv.where() + ": unknown channel '" + channel + "'");
    }
  }
  require(any, path + ": no observation rows");
  obs.validate();
  return obs;
}

void write_observations(const std::string& path, const ObservationSet& obs,
                        const std::vector<std::string>& species) {
  auto out = open_out(path);
  out << "year,species,channel,value\n";
  for (int t = 1; t <= obs.n_years; ++t)
    for (int sp = 0; sp < obs.n_species; ++sp) {
      if (obs.has_w(t, sp))
        out << t << ',' << species[sp] << ",commercial," << format_real(obs.w_at(t, sp)) << '\n';
      if (obs.has_z(t, sp))
        out << t << ',' << species[sp] << ",survey," << format_real(obs.z_at(t, sp)) << '\n';
    }
}

CatchabilityTable load_catchability(const std::string& path) {
  CsvReader csv(path);
  CatchabilityTable table;
  while (csv.next()) {
    const std::string name = csv.get("species");
    const double w = csv.real("w");
    const double q = csv.real("q");
    require(w > 0.0 && q >= 0.0, csv.where() + ": need w > 0 and q >= 0");
    table[name].emplace_back(w, q);
  }
  for (auto& [name, points] : table) {
    std::sort(points.begin(), points.end());
    for (std::size_t i = 1; i < points.size(); ++i)
      require(points[i].first > points[i - 1].first,
              path + ": duplicate weight for species '" + name + "'");
  }
  return table;
}

std::vector<std::string> parameter_header(const std::vector<std::string>& species, int n_years) {
  std::vector<std::string> h;
  h.push_back("ln_kappa");
  for (const auto& s : species) h.push_back("ln_rmax_" + s);
  for (const auto& s : species) h.push_back("phi0_" + s);
  for (int t = 1; t <= n_years; ++t)
    for (const auto& s : species) h.push_back("phi_" + std::to_string(t) + "_" + s);
  for (const auto& s : species) h.push_back("sigma2_c_" + s);
  for (const auto& s : species) h.push_back("sigma2_s_" + s);
  h.push_back("log_post");
  return h;
}

std::string format_parameter_row(const ParameterVector& pv, double log_post) {
  std::ostringstream out;
  out << format_real(pv.ln_kappa);
  for (double v : pv.ln_rmax) out << ',' << format_real(v);
  for (double v : pv.phi0) out << ',' << format_real(v);
  for (double v : pv.phi.v) out << ',' << format_real(v);
  for (double v : pv.variances.sigma2_c) out << ',' << format_real(v);
  for (double v : pv.variances.sigma2_s) out << ',' << format_real(v);
  out << ',' << format_real(log_post);
  return out.str();
}

ParameterVector parse_parameter_row(const std::string& line, int n_species, int n_years,
                                    const std::vector<char>& fixed_c, double* log_post) {
  const auto fields = split(line, ',');
  const std::size_t expected = 1 + 4 * static_cast<std::size_t>(n_species) +
                               static_cast<std::size_t>(n_years) * n_species + 1;
  require(fields.size() == expected, "parameter row: expected " + std::to_string(expected) +
                                         " fields, got " + std::to_string(fields.size()));
  ParameterVector pv;
  std::size_t k = 0;
  auto take = [&]() { return parse_real(fields[k++], "parameter row"); };
  pv.ln_kappa = take();
  pv.ln_rmax.resize(n_species);
  for (auto& v : pv.ln_rmax) v = take();
  pv.phi0.resize(n_species);
  for (auto& v : pv.phi0) v = take();
  pv.phi = PhiMatrix(n_years, n_species);
  for (auto& v : pv.phi.v) v = take();
  pv.variances.sigma2_c.resize(n_species);
  for (auto& v : pv.variances.sigma2_c) v = take();
  pv.variances.sigma2_s.resize(n_species);
  for (auto& v : pv.variances.sigma2_s) v = take();
  pv.variances.fixed_c = fixed_c;
  const double lp = take();
  if (log_post) *log_post = lp;
  return pv;
}

void write_parameter_file(const std::string& path, const ParameterVector& pv,
                          const std::vector<std::string>& species, double log_post) {
  auto out = open_out(path);
  const auto header = parameter_header(species, pv.phi.n_years);
  for (std::size_t i = 0; i < header.size(); ++i) out << (i ? "," : "") << header[i];
  out << '\n' << format_parameter_row(pv, log_post) << '\n';
}

ParameterVector load_parameter_file(const std::string& path, int n_species, int n_years,
                                    const std::vector<char>& fixed_c) {
  std::ifstream in(path);
  require(static_cast<bool>(in), "cannot open parameter file: " + path);
  std::string header, row;
  require(static_cast<bool>(std::getline(in, header)) && static_cast<bool>(std::getline(in, row)),
          path + ": expected a header and one row");
  return parse_parameter_row(row, n_species, n_years, fixed_c, nullptr);
}

}  // namespace ssfit
