#include "doctest.h"

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "pmelab/errors.hpp"
#include "pmelab/experiment.hpp"

using namespace pmelab;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path scratch(const std::string& name) {
  auto p = fs::temp_directory_path() / ("pmelab_exp_" + name);
  fs::remove_all(p);
  return p;
}

const char* kRamp = R"("curvature": {"variant": "RampThenPower", "n": 3, "mu": 2, "Q": 1, "R": 1})";

std::string cfg_text(const std::string& scenario, const std::string& extra) {
  return "{\"scenario\": \"" + scenario + "\", " + kRamp + ", \"m\": 2" + extra + "}";
}

}  // namespace

TEST_CASE("scenario names") {
  CHECK(all_scenarios().size() == 8);
  for (Scenario s : all_scenarios()) CHECK(scenario_from_string(to_string(s)) == s);
  CHECK_THROWS_AS(scenario_from_string("Barenblatt"), ConfigInvalid);
}

TEST_CASE("config validation") {
  try {
    config_from_json(cfg_text("NoSuchScenario", ""));
    FAIL("expected ConfigInvalid");
  } catch (const ConfigInvalid& e) {
    CHECK(e.field == "scenario");
  }
  auto field_of = [](const std::string& text) {
    try {
      config_from_json(text);
    } catch (const ConfigInvalid& e) {
      return e.field;
    }
    return std::string("<none>");
  };
  CHECK(field_of("{\"m\": 2}") == "scenario");
  CHECK(field_of("not json") == "");
  CHECK(field_of(R"({"scenario": "EllipticMinimal", "m": 2})") == "curvature");
  CHECK(field_of(cfg_text("FlowConvergence", R"(, "bump": {})")) == "flow");
  CHECK(field_of(cfg_text("EllipticNonUnique", "")) == "alphas");
  CHECK(field_of(cfg_text("EllipticMinimal", R"(, "colour": 1)")) == "colour");
  CHECK(field_of(cfg_text("EllipticMinimal", R"(, "m": 1)")) == "m");
  CHECK(field_of(cfg_text("EllipticMinimal", R"(, "grid": {"L": -1})")) == "grid.L");
  CHECK(field_of(cfg_text("EllipticMinimal", R"(, "grid": {"spacing": "log"})")) ==
        "grid.spacing");
  CHECK(field_of(cfg_text("EuclideanSanity", R"(, "bump": {}, "flow": {})")) ==
        "curvature.variant");
  CHECK(field_of(cfg_text("FlowConvergence",
                          R"(, "bump": {"width": [30, 31]}, "flow": {})")) == "bump");
  CHECK(field_of(cfg_text("FlowConvergence",
                          R"(, "bump": {}, "flow": {"t_first": 10, "t_end": 1})")) == "flow");
  CHECK(field_of(cfg_text("EllipticMinimal", R"(, "ball_radii": [512, 256])")) == "ball_radii");
  CHECK(field_of(cfg_text("EllipticMinimal", R"(, "seed": -3)")) == "seed");
  CHECK(field_of(R"({"scenario": "PsiAsymptotics", "m": 2,
                     "curvature": {"variant": "Torus", "n": 3}})") == "curvature.variant");
  CHECK(field_of(R"({"scenario": "WeightedTransform", "m": 2, "bump": {},
                     "curvature": {"variant": "RampThenPower", "n": 2}})") == "curvature.n");
  CHECK(field_of(cfg_text("EllipticMinimal", "")) == "<none>");
}

TEST_CASE("config round trip keeps every default") {
  for (Scenario s : all_scenarios()) {
    auto c = default_config(s);
    auto back = config_from_json(config_to_json(c));
    CHECK(config_to_json(back) == config_to_json(c));
  }
  CHECK_THROWS_AS(load_config("/nonexistent/cfg.json"), IoError);
}

TEST_CASE("seeded bump stays in its bounds and is reproducible") {
  auto c = default_config(Scenario::SupportLaw);
  c.bump.center_lo = 0.0;
  c.bump.center_hi = 2.0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    c.seed = seed;
    auto d = draw_bump(c);
    CHECK(d.width >= c.bump.width_lo);
    CHECK(d.width <= c.bump.width_hi);
    CHECK(d.center >= 0.0);
    CHECK(d.center <= 2.0);
    auto e = draw_bump(c);
    CHECK(d.width == e.width);
    CHECK(d.center == e.center);
  }
  auto g = RadialGrid::uniform(4.0, 40);
  auto u = make_bump(g, 2.0, {1.0, 0.5});
  CHECK(u[10] == 2.0);
  CHECK(u[0] == 0.0);
  CHECK(u[15] == 0.0);
}

TEST_CASE("row evaluation") {
  CHECK(make_row("a", 1.05, 1.0, 0.1, Compare::Rel, "").pass);
  CHECK_FALSE(make_row("a", 1.2, 1.0, 0.1, Compare::Rel, "").pass);
  CHECK(make_row("a", 0.9, 1.0, 0.1, Compare::Abs, "").pass);
  CHECK(make_row("a", 2.0, 1.0, 1.0, Compare::AtMost, "").pass);
  CHECK_FALSE(make_row("a", 2.1, 1.0, 1.0, Compare::AtMost, "").pass);
  CHECK_FALSE(make_row("a", -1e-9, 0.0, 0.0, Compare::AtLeast, "").pass);
  CHECK_FALSE(make_row("a", std::nan(""), 0.0, 1.0, Compare::AtMost, "").pass);
  auto i = make_row("a", 5.0, 1.0, 0.0, Compare::Info, "");
  CHECK(i.pass);
  CHECK_FALSE(i.target.has_value());
}

TEST_CASE("report emission") {
  auto dir = scratch("report");
  std::vector<ReportRow> ok = {make_row("x", 1.0, 1.0, 0.0, Compare::Abs, "src")};
  CHECK(emit_report(dir.string(), "S", ok) == 0);
  auto first = slurp(dir / "report.json");
  CHECK(emit_report(dir.string(), "S", ok) == 0);
  CHECK(slurp(dir / "report.json") == first);
  auto rows = read_report((dir / "report.json").string());
  REQUIRE(rows.size() == 1);
  CHECK(rows[0].pass);
  CHECK(rows[0].source == "src");

  auto bad = ok;
  bad.push_back(make_row("y", 3.0, 1.0, 0.5, Compare::Abs, "src"));
  CHECK(emit_report(dir.string(), "S", bad) == 1);
  CHECK(slurp(dir / "report.txt").find("FAIL") != std::string::npos);
  CHECK_THROWS_AS(emit_report(dir.string(), "S", {}), InvalidArgument);

  // the table columns line up
  std::istringstream tab(report_table(bad));
  std::string l1, l2;
  std::getline(tab, l1);
  std::getline(tab, l2);
  CHECK(l1.find("measured") == l2.find("1.0"));
  fs::remove_all(dir);
}

TEST_CASE("output root override") {
  setenv(kOutputRootEnv, "/tmp/root_x", 1);
  CHECK(resolve_output_dir("out/a") == "/tmp/root_x/out/a");
  CHECK(resolve_output_dir("/abs/a") == "/abs/a");
  unsetenv(kOutputRootEnv);
  CHECK(resolve_output_dir("out/a") == "out/a");
}

TEST_CASE("elliptic scenario reports the tail constant") {
  auto dir = scratch("elliptic");
  auto c = config_from_json(cfg_text("EllipticMinimal", ""));
  c.output_dir = dir.string();
  auto res = run_experiment(c);
  CHECK(res.status == 0);
  bool seen = false;
  for (const auto& r : res.rows)
    if (r.quantity == "tail constant") {
      seen = true;
      CHECK(*r.target == doctest::Approx(0.25).epsilon(1e-14));
      CHECK(r.tolerance == 0.10);
      CHECK(r.pass);
      CHECK_FALSE(r.source.empty());
    }
  CHECK(seen);
  CHECK(fs::exists(dir / "config.json"));
  CHECK(fs::exists(dir / "minimal_balls.csv"));
  CHECK(fs::exists(dir / "report.txt"));
  fs::remove_all(dir);
}

TEST_CASE("Euclidean scenario is deterministic") {
  auto dir = scratch("euclid");
  auto c = default_config(Scenario::EuclideanSanity);
  c.grid.N = 1000;
  c.flow.t_end = 1e3;
  c.window_hi = 1e3;
  c.output_dir = dir.string();
  auto a = run_experiment(c);
  auto first = slurp(dir / "report.json");
  auto series = slurp(dir / "series.csv");
  auto b = run_experiment(c);
  CHECK(slurp(dir / "report.json") == first);
  CHECK(slurp(dir / "series.csv") == series);
  const ReportRow* decay = nullptr;
  for (const auto& r : a.rows)
    if (r.quantity == "sup-norm decay exponent") decay = &r;
  REQUIRE(decay);
  CHECK(*decay->target == doctest::Approx(-0.6).epsilon(1e-14));
  CHECK(decay->measured == doctest::Approx(-0.6).epsilon(0.05));
  CHECK(a.status == b.status);
  fs::remove_all(dir);
}
