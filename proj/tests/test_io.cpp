#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "ssfit/dataset.hpp"
#include "ssfit/errors.hpp"
#include "ssfit/model_build.hpp"
#include "ssfit/tables.hpp"

using namespace ssfit;

namespace {

struct TempDir {
  std::filesystem::path path;
  TempDir() {
    path = std::filesystem::temp_directory_path() /
           ("ssfit_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::create_directories(path);
  }
  ~TempDir() { std::filesystem::remove_all(path); }
  std::string file(const std::string& name) const { return (path / name).string(); }
  static int counter;
};
int TempDir::counter = 0;

void write(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  out << text;
}

}  // namespace

TEST_CASE("species table round-trips") {
  TempDir dir;
  std::vector<SpeciesRow> rows(2);
  rows[0].name = "a";
  rows[0].w_egg = 1e-3;
  rows[0].w_mat = 10;
  rows[0].w_inf = 100;
  rows[0].max_intake_coeff = 30;
  rows[0].intake_exponent = 0.6666;
  rows[0].search_volume_coeff = 123.25;
  rows[0].sigma2_c_fixed = 4.0;
  rows[0].w_masked = true;
  rows[1] = rows[0];
  rows[1].name = "b";
  rows[1].sigma2_c_fixed.reset();
  rows[1].w_masked = false;

  write_species_table(dir.file("sp.csv"), rows);
  const auto back = load_species_table(dir.file("sp.csv"));
  REQUIRE(back.size() == 2);
  CHECK(back[0].name == "a");
  CHECK(back[0].search_volume_coeff == 123.25);
  CHECK(back[0].sigma2_c_fixed == 4.0);
  CHECK(back[0].w_masked);
  CHECK(!back[1].sigma2_c_fixed.has_value());
  CHECK(!back[1].w_masked);
}

TEST_CASE("species table rejects duplicates and missing columns") {
  TempDir dir;
  write(dir.file("dup.csv"),
        "name,w_egg,w_mat,w_inf,max_intake_coeff,intake_exponent\n"
        "a,1e-3,10,100,30,0.66\na,1e-3,10,100,30,0.66\n");
  CHECK_THROWS_AS(load_species_table(dir.file("dup.csv")), ValidationError);
  write(dir.file("short.csv"), "name,w_egg\na,1\n");
  CHECK_THROWS_AS(load_species_table(dir.file("short.csv")), ValidationError);
  write(dir.file("empty.csv"), "name,w_egg,w_mat,w_inf,max_intake_coeff,intake_exponent\n");
  CHECK_THROWS_AS(load_species_table(dir.file("empty.csv")), ValidationError);
}

TEST_CASE("observation loader enforces the schema") {
  TempDir dir;
  const std::vector<std::string> species{"a", "b"};

  write(dir.file("ok.csv"),
        "year,species,channel,value\n1,a,commercial,5\n3,b,survey,2\n#comment\n");
  const ObservationSet obs = load_observations(dir.file("ok.csv"), species, 4, 3);
  CHECK(obs.has_w(1, 0));
  CHECK(obs.w_at(1, 0) == 5.0);
  CHECK(obs.has_z(3, 1));
  CHECK(!obs.has_w(2, 0));
  CHECK(obs.count_w() == 1);
  CHECK(obs.count_z() == 1);

  write(dir.file("unknown.csv"), "year,species,channel,value\n1,zz,commercial,5\n");
  CHECK_THROWS_WITH_AS(load_observations(dir.file("unknown.csv"), species, 4, 3),
                       doctest::Contains("unknown species"), ValidationError);

  write(dir.file("dup.csv"),
        "year,species,channel,value\n1,a,commercial,5\n1,a,commercial,6\n");
  CHECK_THROWS_WITH_AS(load_observations(dir.file("dup.csv"), species, 4, 3),
                       doctest::Contains("duplicate"), ValidationError);

  write(dir.file("zero.csv"), "year,species,channel,value\n1,a,commercial,0\n");
  CHECK_THROWS_AS(load_observations(dir.file("zero.csv"), species, 4, 3), ValidationError);

  // survey rows before the first survey year are named, not silently fixed
  write(dir.file("early.csv"), "year,species,channel,value\n2,a,survey,1\n");
  CHECK_THROWS_WITH_AS(load_observations(dir.file("early.csv"), species, 4, 3),
                       doctest::Contains("early.csv:2"), ValidationError);

  write(dir.file("none.csv"), "year,species,channel,value\n");
  CHECK_THROWS_AS(load_observations(dir.file("none.csv"), species, 4, 3), ValidationError);

  write(dir.file("badchan.csv"), "year,species,channel,value\n1,a,landings,5\n");
  CHECK_THROWS_AS(load_observations(dir.file("badchan.csv"), species, 4, 3), ValidationError);
}

TEST_CASE("observations round-trip through write and load") {
  TempDir dir;
  ObservationSet obs = ObservationSet::empty(3, 2, 2);
  obs.set_w(1, 0, 10.5);
  obs.set_w(3, 1, 0.125);
  obs.set_z(2, 0, 7.25);
  write_observations(dir.file("obs.csv"), obs, {"a", "b"});
  const ObservationSet back = load_observations(dir.file("obs.csv"), {"a", "b"}, 3, 2);
  CHECK(back.w == obs.w);
  CHECK(back.z == obs.z);
  CHECK(back.w_mask == obs.w_mask);
  CHECK(back.z_mask == obs.z_mask);
}

TEST_CASE("survey effort loader") {
  TempDir dir;
  write(dir.file("eff.csv"), "year,effort\n3,1\n4,0.5\n");
  const auto eff = load_survey_effort(dir.file("eff.csv"), 5);
  CHECK(eff == std::vector<double>{0, 0, 1, 0.5, 0});
  write(dir.file("bad.csv"), "year,effort\n9,1\n");
  CHECK_THROWS_AS(load_survey_effort(dir.file("bad.csv"), 5), ValidationError);
}

TEST_CASE("parameter rows round-trip bit-exactly") {
  ParameterVector pv;
  pv.ln_kappa = 21.000000000000004;
  pv.ln_rmax = {24.1, 23.000000001};
  pv.phi0 = {0.3, 0.2};
  pv.phi = PhiMatrix(3, 2);
  for (std::size_t k = 0; k < pv.phi.v.size(); ++k) pv.phi.v[k] = 0.1 + k * 0.07;
  pv.variances.sigma2_c = {0.01, 4.0};
  pv.variances.sigma2_s = {0.04, 0.25};
  pv.variances.fixed_c = {0, 1};

  const std::string row = format_parameter_row(pv, -12.5);
  double lp = 0.0;
  const ParameterVector back = parse_parameter_row(row, 2, 3, {0, 1}, &lp);
  CHECK(lp == -12.5);
  CHECK(back.ln_kappa == pv.ln_kappa);
  CHECK(back.ln_rmax == pv.ln_rmax);
  CHECK(back.phi.v == pv.phi.v);
  CHECK(back.variances.sigma2_c == pv.variances.sigma2_c);

  const auto header = parameter_header({"a", "b"}, 3);
  CHECK(header.size() == 1 + 2 + 2 + 6 + 2 + 2 + 1);
  CHECK(header.front() == "ln_kappa");
  CHECK(header.back() == "log_post");
}

TEST_CASE("catchability table loads onto the grid") {
  TempDir dir;
  write(dir.file("q.csv"), "species,w,q\nsmall,0.001,0\nsmall,1,0.2\nsmall,100,0.8\n");
  const CatchabilityTable table = load_catchability(dir.file("q.csv"));
  REQUIRE(table.count("small") == 1);
  CHECK(table.at("small").size() == 3);
  write(dir.file("dupw.csv"), "species,w,q\na,1,0.5\na,1,0.6\n");
  CHECK_THROWS_AS(load_catchability(dir.file("dupw.csv")), ValidationError);
}

TEST_CASE("shipped toy dataset parses and matches its generator") {
  // The committed observations must reproduce bit-for-bit from the committed
  // config, truth values, and recorded seed.
  const Config cfg = Config::parse_file("data/toy3/toy3.cfg");
  const ModelBundle bundle = build_model_bundle(cfg, "data/toy3");
  CHECK(bundle.n_species() == 3);
  CHECK(bundle.n_years == 10);
  CHECK(bundle.first_survey_year == 3);

  const ObservationSet obs = load_observations("data/toy3/observations.csv",
                                               bundle.species_names, 10, 3);
  CHECK(obs.count_w() == 30);   // 3 species x 10 years
  CHECK(obs.count_z() == 24);   // 3 species x 8 survey years

  const ParameterVector truth = truth_from_config(cfg, bundle);
  const ObservationSet regen = generate_synthetic(bundle, truth, 20260808);
  CHECK(regen.w == obs.w);
  CHECK(regen.z == obs.z);
  CHECK(regen.w_mask == obs.w_mask);
  CHECK(regen.z_mask == obs.z_mask);
}

TEST_CASE("generate_synthetic basics") {
  const Config cfg = Config::parse_file("data/toy3/toy3.cfg");
  const ModelBundle bundle = build_model_bundle(cfg, "data/toy3");
  ParameterVector truth = truth_from_config(cfg, bundle);

  // identical seeds give identical data
  const ObservationSet a = generate_synthetic(bundle, truth, 5);
  const ObservationSet b = generate_synthetic(bundle, truth, 5);
  CHECK(a.w == b.w);
  CHECK(a.z == b.z);

  // the zero-noise limit reproduces the model catches exactly
  ParameterVector clean = truth;
  std::fill(clean.variances.sigma2_c.begin(), clean.variances.sigma2_c.end(), 0.0);
  std::fill(clean.variances.sigma2_s.begin(), clean.variances.sigma2_s.end(), 0.0);
  const ObservationSet exact = generate_synthetic(bundle, clean, 7);
  const SimulationRun run = simulate_point(bundle, clean);
  for (int t = 1; t <= 10; ++t)
    for (int sp = 0; sp < 3; ++sp)
      if (exact.has_w(t, sp))
        CHECK(exact.w_at(t, sp) == run.trajectory.catches[t - 1].commercial[sp]);
}
