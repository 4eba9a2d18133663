#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "doctest.h"
#include "json.hpp"

#include "arrival/scenario.hpp"

using namespace arrival;
using namespace arrival::scenario;

namespace {

ScenarioConfig cfg(std::initializer_list<const char*> sets) {
  ScenarioConfig c;
  for (const char* s : sets) c.set_assignment(s);
  return c;
}

bool contains(const std::string& hay, const std::string& needle) {
  return hay.find(needle) != std::string::npos;
}

}  // namespace

TEST_SUITE("scenario") {

TEST_CASE("config parsing and validation errors name the key") {
  ScenarioConfig c;
  CHECK(c.text("pipeline") == "unitary");
  c.set_assignment("x0 = 4.5");
  CHECK(c.real("x0") == 4.5);
  try {
    c.set("no_such_key", "1");
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(e.key() == "no_such_key");
  }
  c.set("sigma", "abc");
  CHECK_THROWS_AS(c.real("sigma"), ConfigError);
  CHECK_THROWS_AS(c.set_assignment("sigma"), ConfigError);
  c.set("sigma", "-1");
  try {
    c.validate();
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(e.key() == "sigma");
  }
  CHECK_THROWS_AS(cfg({"pipeline=nope"}).validate(), ConfigError);
  CHECK_THROWS_AS(cfg({"strict=maybe"}).flag("strict"), ConfigError);
  CHECK_THROWS_AS(cfg({"seed=-3"}).u64("seed"), ConfigError);
}

TEST_CASE("config file with comments, and time sweeps") {
  auto p = std::filesystem::temp_directory_path() / "arrival_cfg_test.conf";
  {
    std::ofstream f(p);
    f << "# sweep\n\npipeline = unitary\nt_min = 0.01  # first\nt_max = 1\nt_count = 3\n";
  }
  auto c = ScenarioConfig::from_file(p);
  auto ts = c.times();
  REQUIRE(ts.size() == 3);
  CHECK(ts[0] == doctest::Approx(0.01));
  CHECK(ts[1] == doctest::Approx(0.1));
  CHECK(ts[2] == doctest::Approx(1.0));
  {
    std::ofstream f(p);
    f << "bogus line\n";
  }
  CHECK_THROWS_AS(ScenarioConfig::from_file(p), ConfigError);
  std::filesystem::remove(p);
  CHECK_THROWS_AS(cfg({"t_min=1", "t_max=0.5", "t_count=4"}).times(), ConfigError);
}

TEST_CASE("CSV round trip keeps values bit for bit") {
  ResultTable t;
  t.add_meta("note", "has, comma and \"quotes\"");
  t.add_column("a", {0.1, -1e-300, 1.0 / 3.0});
  t.add_complex_column("z", {cplx(1, 2), cplx(-0.5, 1e20), cplx(0, 0)});
  auto back = ResultTable::from_csv(t.to_csv());
  CHECK(back.meta_value("note") == "has, comma and \"quotes\"");
  REQUIRE(back.rows() == 3);
  for (const char* name : {"a", "z_re", "z_im"})
    for (std::size_t i = 0; i < 3; ++i) CHECK(back.column(name).values[i] == t.column(name).values[i]);
  CHECK(back.meta_value("missing").empty());
}

TEST_CASE("CSV edge cases: empty table, odd names, a million rows") {
  ResultTable e;
  e.add_column("x", {});
  auto eb = ResultTable::from_csv(e.to_csv());
  CHECK(eb.rows() == 0);
  CHECK(eb.columns().size() == 1);

  ResultTable q;
  q.add_column("a,b", {1.0});
  q.add_column("say \"hi\"", {2.0});
  auto qb = ResultTable::from_csv(q.to_csv());
  CHECK(qb.column("a,b").values[0] == 1.0);
  CHECK(qb.column("say \"hi\"").values[0] == 2.0);

  std::vector<double> big(1000000);
  for (std::size_t i = 0; i < big.size(); ++i) big[i] = std::sin(static_cast<double>(i)) * 1e-3;
  ResultTable b;
  b.add_column("v", big);
  auto bb = ResultTable::from_csv(b.to_csv());
  REQUIRE(bb.rows() == big.size());
  CHECK(bb.column("v").values == big);
}

TEST_CASE("JSON layout") {
  ResultTable t;
  t.add_meta("k", "v");
  t.add_column("x", {1.0, std::nan(""), INFINITY});
  auto j = nlohmann::json::parse(t.to_json());
  CHECK(j["meta"]["k"] == "v");
  CHECK(j["columns"]["x"][0] == 1.0);
  CHECK(j["columns"]["x"][1].is_string());
  CHECK(j["columns"]["x"][2].is_string());
  CHECK(parse_format("json") == Format::json);
  CHECK_THROWS_AS(parse_format("xml"), ConfigError);
}

TEST_CASE("unitary pipeline: antisymmetric state never crosses") {
  auto t = run_scenario(cfg({"state=antisymmetric", "x0=3", "p0=-2", "t_min=0.1", "t_max=2",
                             "t_count=4"}));
  CHECK(t.meta_value("pipeline") == "unitary");
  CHECK(t.meta_value("config.state") == "antisymmetric");
  REQUIRE(t.rows() == 4);
  for (double v : t.column("p_cross").values) CHECK(v < 1e-10);
  for (double v : t.column("sum_rule_residual").values) CHECK(std::abs(v) < 1e-10);
}

TEST_CASE("ensemble pipeline: alpha = 1 gives epsilon of one everywhere") {
  auto t = run_scenario(cfg({"pipeline=ensemble", "N=30", "one_alpha=1", "one_p=0.4"}));
  REQUIRE(t.rows() == 31);
  for (double v : t.column("epsilon_ref").values) CHECK(v == doctest::Approx(1.0).epsilon(1e-9));
  double s = 0;
  for (double v : t.column("p_n").values) s += v;
  CHECK(s < 1.0);
  auto m = run_scenario(cfg({"pipeline=ensemble", "N=10", "ensemble_view=epsilon_matrix"}));
  CHECK(m.rows() == 121);
  CHECK_THROWS_AS(run_scenario(cfg({"pipeline=ensemble", "N=500", "ensemble_view=epsilon_matrix"})),
                  ConfigError);
}

TEST_CASE("plot scripts") {
  auto sweep = run_scenario(cfg({"t_min=0.01", "t_max=0.1", "t_count=5", "x0=0.5", "p0=0", "sigma=0.3"}));
  auto dist = run_scenario(cfg({"pipeline=ensemble", "N=20"}));
  auto mat = run_scenario(cfg({"pipeline=ensemble", "N=8", "ensemble_view=epsilon_matrix"}));
  const std::pair<const char*, const ResultTable*> cases[] = {{"smalltime-scaling", &sweep},
                                                             {"survival-vs-t", &sweep},
                                                             {"pn-histogram", &dist},
                                                             {"epsilon-heatmap", &mat}};
  for (const auto& [k, table] : cases) {
    auto kind = parse_plot_kind(k);
    CHECK(plot_kind_name(kind) == k);
    auto s = plot_script(*table, kind, "my_run.csv");
    CHECK(contains(s, "my_run.csv"));
    CHECK(contains(s, "matplotlib"));
    CHECK(contains(s, "Agg"));
  }
  auto s = plot_script(sweep, PlotKind::smalltime_scaling, "r.csv");
  CHECK(contains(s, "0.5"));
  CHECK_THROWS(plot_script(sweep, PlotKind::pn_histogram, "r.csv"));
  CHECK_THROWS_AS(parse_plot_kind("pie"), ConfigError);
}

TEST_CASE("runs are deterministic; Monte Carlo needs a seed") {
  auto a = cfg({"pipeline=classical", "x0=2", "p0=-1", "sigma=0.3", "quad_n=31", "n_paths=1000",
                "n_steps=100", "seed=77"});
  CHECK(run_to_csv(a) == run_to_csv(a));
  auto b = a;
  b.set("seed", "");
  try {
    run_scenario(b);
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(e.key() == "seed");
  }
}

TEST_CASE("qbm pipeline: regime warning in meta, thrown under strict") {
  auto c = cfg({"pipeline=qbm", "quad_n=31", "coarse_n=11", "gamma=0.01"});
  auto t = run_scenario(c);
  CHECK(t.meta_value("regime_warning") == "true");
  c.set("strict", "true");
  CHECK_THROWS_AS(run_scenario(c), RegimeWarning);
}

}
