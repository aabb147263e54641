#include "pmelab/experiment.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <random>
#include <set>
#include <sstream>
#include <tuple>

#include "json.hpp"
#include "pmelab/barriers.hpp"
#include "pmelab/elliptic.hpp"
#include "pmelab/errors.hpp"
#include "pmelab/weighted.hpp"

namespace pmelab {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

const std::vector<std::pair<Scenario, const char*>> kNames = {
    {Scenario::PsiAsymptotics, "PsiAsymptotics"},
    {Scenario::EllipticMinimal, "EllipticMinimal"},
    {Scenario::EllipticNonUnique, "EllipticNonUnique"},
    {Scenario::FlowConvergence, "FlowConvergence"},
    {Scenario::SupportLaw, "SupportLaw"},
    {Scenario::BarrierSandwich, "BarrierSandwich"},
    {Scenario::WeightedTransform, "WeightedTransform"},
    {Scenario::EuclideanSanity, "EuclideanSanity"},
};

bool is_flow(Scenario s) {
  return s == Scenario::FlowConvergence || s == Scenario::SupportLaw ||
         s == Scenario::BarrierSandwich || s == Scenario::EuclideanSanity ||
         s == Scenario::WeightedTransform;
}

GridSettings uniform(double L, std::size_t N) {
  GridSettings g;
  g.L = L;
  g.N = N;
  return g;
}

GridSettings graded(double L, double h0, double r_switch, double rel) {
  GridSettings g;
  g.spacing = Spacing::Graded;
  g.L = L;
  g.h0 = h0;
  g.r_switch = r_switch;
  g.rel = rel;
  return g;
}

}  // namespace

std::string to_string(Scenario s) {
  for (const auto& [k, name] : kNames)
    if (k == s) return name;
  return "?";
}

Scenario scenario_from_string(const std::string& s) {
  for (const auto& [k, name] : kNames)
    if (s == name) return k;
  throw ConfigInvalid("scenario", "unknown scenario '" + s + "'");
}

const std::vector<Scenario>& all_scenarios() {
  static const std::vector<Scenario> all = [] {
    std::vector<Scenario> v;
    for (const auto& kv : kNames) v.push_back(kv.first);
    return v;
  }();
  return all;
}

RadialGrid GridSettings::build() const {
  if (spacing == Spacing::Uniform) return RadialGrid::uniform(L, N);
  return RadialGrid::graded(L, h0, r_switch, rel);
}

ExperimentConfig default_config(Scenario s) {
  ExperimentConfig c;
  c.scenario = s;
  c.curvature = CurvatureSpec::ramp_then_power(3, 2.0, 1.0, 1.0);
  c.output_dir = "out/" + to_string(s);
  c.ball_radii = {256, 512, 1024, 2048, 4096};
  const GridSettings far = graded(4096.0, 0.005, 1.0, 0.01);
  switch (s) {
    case Scenario::PsiAsymptotics:
      c.grid = uniform(10.0, 2000);
      break;
    case Scenario::EllipticMinimal:
      c.grid = far;
      c.window_lo = 16.0;
      c.window_hi = 64.0;
      break;
    case Scenario::EllipticNonUnique:
      c.grid = far;
      c.alphas = {0.1, 1.0};
      break;
    case Scenario::FlowConvergence:
      c.grid = uniform(26.0, 2600);
      c.aux_grid = far;
      c.bump = {1.0, 0.0, 0.0, 0.9 * 26.0, 0.98 * 26.0};
      c.flow.t_end = 1e8;
      c.flow.per_decade = 1;
      break;
    case Scenario::SupportLaw:
    case Scenario::BarrierSandwich:
      c.grid = uniform(28.0, 2800);
      c.aux_grid = far;
      c.bump = {0.01, 0.0, 0.0, 0.9, 1.1};
      c.flow.t_first = 1e-2;
      // the lower front only passes r = 1 near t = 1e10
      c.flow.t_end = 1e12;
      c.flow.per_decade = 4;
      c.window_lo = 1e4;
      c.window_hi = 1e8;
      break;
    case Scenario::WeightedTransform:
      c.grid = far;
      c.aux_grid = uniform(8.0, 800);
      c.bump = {0.8, 0.0, 0.0, 1.3, 1.7};
      c.flow.t_end = 1.0;
      break;
    case Scenario::EuclideanSanity:
      c.curvature = CurvatureSpec::flat(3);
      c.grid = uniform(20.0, 2000);
      c.bump = {1.0, 0.0, 0.0, 0.8, 1.2};
      c.flow.t_end = 1e4;
      c.flow.per_decade = 2;
      c.window_lo = 1e2;
      c.window_hi = 1e4;
      break;
  }
  return c;
}

// ---------------------------------------------------------------- config files

namespace {

json grid_json(const GridSettings& g) {
  json j;
  if (g.spacing == Spacing::Uniform) {
    j["spacing"] = "uniform";
    j["L"] = g.L;
    j["N"] = g.N;
  } else {
    j["spacing"] = "graded";
    j["L"] = g.L;
    j["h0"] = g.h0;
    j["r_switch"] = g.r_switch;
    j["rel"] = g.rel;
  }
  return j;
}

json curvature_json(const CurvatureSpec& s) {
  json j;
  j["variant"] = to_string(s.variant);
  j["n"] = s.n;
  if (s.variant == Variant::Flat) return j;
  j["mu"] = s.mu;
  j["Q"] = s.Q;
  if (s.variant == Variant::RampThenPower) j["R"] = s.R;
  if (s.variant == Variant::FloorMaxPower) j["D"] = s.D;
  if (s.variant == Variant::ExplicitExp) {
    j["a"] = s.a;
    j["A"] = s.A;
    j["alpha"] = s.alpha;
  }
  return j;
}

// typed reads with the dotted field name in the error
class Reader {
 public:
  Reader(const json& j, std::string prefix) : j_(j), prefix_(std::move(prefix)) {
    if (!j_.is_object()) throw ConfigInvalid(name(""), "expected an object");
  }
  bool has(const char* k) const { return j_.contains(k); }
  std::string name(const std::string& k) const {
    return prefix_.empty() ? k : k.empty() ? prefix_ : prefix_ + "." + k;
  }
  double num(const char* k, double dflt) const {
    if (!has(k)) return dflt;
    const auto& v = j_.at(k);
    if (!v.is_number()) throw ConfigInvalid(name(k), "expected a number");
    double x = v.get<double>();
    if (!std::isfinite(x)) throw ConfigInvalid(name(k), "not finite");
    return x;
  }
  long integer(const char* k, long dflt) const {
    if (!has(k)) return dflt;
    const auto& v = j_.at(k);
    if (!v.is_number_integer()) throw ConfigInvalid(name(k), "expected an integer");
    return v.get<long>();
  }
  std::string str(const char* k, const std::string& dflt) const {
    if (!has(k)) return dflt;
    const auto& v = j_.at(k);
    if (!v.is_string()) throw ConfigInvalid(name(k), "expected a string");
    return v.get<std::string>();
  }
  std::vector<double> nums(const char* k, std::vector<double> dflt) const {
    if (!has(k)) return dflt;
    const auto& v = j_.at(k);
    if (!v.is_array()) throw ConfigInvalid(name(k), "expected an array of numbers");
    std::vector<double> out;
    for (const auto& x : v) {
      if (!x.is_number()) throw ConfigInvalid(name(k), "expected an array of numbers");
      out.push_back(x.get<double>());
    }
    return out;
  }
  std::pair<double, double> range(const char* k, double lo, double hi) const {
    if (!has(k)) return {lo, hi};
    auto v = j_.at(k);
    if (v.is_number()) return {v.get<double>(), v.get<double>()};
    auto x = nums(k, {});
    if (x.size() != 2) throw ConfigInvalid(name(k), "expected a number or [lo, hi]");
    return {x[0], x[1]};
  }
  const json& sub(const char* k) const { return j_.at(k); }
  void only(std::initializer_list<const char*> keys) const {
    std::set<std::string> ok(keys.begin(), keys.end());
    for (const auto& [k, v] : j_.items())
      if (!ok.count(k)) throw ConfigInvalid(name(k), "unknown key");
  }

 private:
  const json& j_;
  std::string prefix_;
};

GridSettings read_grid(const json& j, const std::string& field, GridSettings g) {
  Reader r(j, field);
  r.only({"spacing", "L", "N", "h0", "r_switch", "rel"});
  const std::string sp = r.str("spacing", g.spacing == Spacing::Uniform ? "uniform" : "graded");
  if (sp == "uniform") g.spacing = Spacing::Uniform;
  else if (sp == "graded") g.spacing = Spacing::Graded;
  else throw ConfigInvalid(r.name("spacing"), "expected 'uniform' or 'graded'");
  g.L = r.num("L", g.L);
  long N = r.integer("N", long(g.N));
  if (N < 10) throw ConfigInvalid(r.name("N"), "need at least 10 intervals");
  g.N = std::size_t(N);
  g.h0 = r.num("h0", g.h0);
  g.r_switch = r.num("r_switch", g.r_switch);
  g.rel = r.num("rel", g.rel);
  if (!(g.L > 0)) throw ConfigInvalid(r.name("L"), "must be positive");
  if (g.spacing == Spacing::Graded && (!(g.h0 > 0) || !(g.rel > 0) || !(g.r_switch > 0)))
    throw ConfigInvalid(field, "graded spacing needs positive h0, r_switch and rel");
  return g;
}

CurvatureSpec read_curvature(const json& j) {
  Reader r(j, "curvature");
  r.only({"variant", "n", "mu", "Q", "R", "D", "a", "A", "alpha"});
  if (!r.has("variant")) throw ConfigInvalid("curvature.variant", "required");
  Variant v;
  try {
    v = variant_from_string(r.str("variant", ""));
  } catch (const InvalidArgument& e) {
    throw ConfigInvalid("curvature.variant", e.what());
  }
  const int n = int(r.integer("n", 3));
  CurvatureSpec s;
  switch (v) {
    case Variant::Flat: s = CurvatureSpec::flat(n); break;
    case Variant::RampThenPower:
      s = CurvatureSpec::ramp_then_power(n, r.num("mu", 2.0), r.num("Q", 1.0), r.num("R", 1.0));
      break;
    case Variant::FloorMaxPower:
      s = CurvatureSpec::floor_max_power(n, r.num("mu", 2.0), r.num("Q", 1.0), r.num("D", 0.0));
      break;
    case Variant::ExplicitExp:
      if (!r.has("a") || !r.has("A") || !r.has("alpha"))
        throw ConfigInvalid("curvature", "ExplicitExp needs a, A and alpha");
      s = CurvatureSpec::explicit_exp(n, r.num("a", 0.0), r.num("A", 0.0), r.num("alpha", 0.0));
      break;
  }
  try {
    s.validate();
  } catch (const InvalidArgument& e) {
    throw ConfigInvalid("curvature", e.what());
  }
  return s;
}

}  // namespace

ExperimentConfig config_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigInvalid("", std::string("not valid JSON: ") + e.what());
  }
  Reader r(j, "");
  r.only({"scenario", "curvature", "m", "grid", "aux_grid", "flow", "bump", "alphas",
          "ball_radii", "ball_tol", "window", "seed", "output_dir"});
  if (!r.has("scenario")) throw ConfigInvalid("scenario", "required");
  const Scenario s = scenario_from_string(r.str("scenario", ""));
  ExperimentConfig c = default_config(s);

  std::vector<const char*> required = {"curvature", "m"};
  if (is_flow(s)) required.push_back("bump");
  if (is_flow(s) && s != Scenario::WeightedTransform) required.push_back("flow");
  if (s == Scenario::EllipticNonUnique) required.push_back("alphas");
  for (const char* k : required)
    if (!r.has(k)) throw ConfigInvalid(k, "required for " + to_string(s));

  c.curvature = read_curvature(r.sub("curvature"));
  c.m = r.num("m", c.m);
  if (r.has("grid")) c.grid = read_grid(r.sub("grid"), "grid", c.grid);
  if (r.has("aux_grid")) c.aux_grid = read_grid(r.sub("aux_grid"), "aux_grid", c.aux_grid);
  if (r.has("flow")) {
    Reader f(r.sub("flow"), "flow");
    f.only({"t_first", "t_end", "per_decade", "dt_init", "dt_ratio"});
    c.flow.t_first = f.num("t_first", c.flow.t_first);
    c.flow.t_end = f.num("t_end", c.flow.t_end);
    c.flow.per_decade = int(f.integer("per_decade", c.flow.per_decade));
    c.flow.stepping.dt_init = f.num("dt_init", c.flow.stepping.dt_init);
    c.flow.stepping.dt_ratio = f.num("dt_ratio", c.flow.stepping.dt_ratio);
  }
  if (r.has("bump")) {
    Reader b(r.sub("bump"), "bump");
    b.only({"height", "center", "width"});
    c.bump.height = b.num("height", c.bump.height);
    std::tie(c.bump.center_lo, c.bump.center_hi) =
        b.range("center", c.bump.center_lo, c.bump.center_hi);
    std::tie(c.bump.width_lo, c.bump.width_hi) = b.range("width", c.bump.width_lo, c.bump.width_hi);
  }
  c.alphas = r.nums("alphas", c.alphas);
  c.ball_radii = r.nums("ball_radii", c.ball_radii);
  c.ball_tol = r.num("ball_tol", c.ball_tol);
  if (r.has("window")) {
    auto w = r.nums("window", {});
    if (w.size() != 2) throw ConfigInvalid("window", "expected [lo, hi]");
    c.window_lo = w[0];
    c.window_hi = w[1];
  }
  long seed = r.integer("seed", 0);
  if (seed < 0) throw ConfigInvalid("seed", "must be nonnegative");
  c.seed = std::uint64_t(seed);
  c.output_dir = r.str("output_dir", c.output_dir);
  validate(c);
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read config '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return config_from_json(ss.str());
}

std::string config_to_json(const ExperimentConfig& c) {
  json j;
  j["scenario"] = to_string(c.scenario);
  j["curvature"] = curvature_json(c.curvature);
  j["m"] = c.m;
  j["grid"] = grid_json(c.grid);
  if (c.scenario == Scenario::WeightedTransform || c.scenario == Scenario::FlowConvergence ||
      c.scenario == Scenario::SupportLaw || c.scenario == Scenario::BarrierSandwich)
    j["aux_grid"] = grid_json(c.aux_grid);
  if (is_flow(c.scenario)) {
    j["flow"] = {{"t_first", c.flow.t_first},
                 {"t_end", c.flow.t_end},
                 {"per_decade", c.flow.per_decade},
                 {"dt_init", c.flow.stepping.dt_init},
                 {"dt_ratio", c.flow.stepping.dt_ratio}};
    j["bump"] = {{"height", c.bump.height},
                 {"center", {c.bump.center_lo, c.bump.center_hi}},
                 {"width", {c.bump.width_lo, c.bump.width_hi}}};
  }
  if (c.scenario == Scenario::EllipticNonUnique) j["alphas"] = c.alphas;
  j["ball_radii"] = c.ball_radii;
  j["ball_tol"] = c.ball_tol;
  j["window"] = {c.window_lo, c.window_hi};
  j["seed"] = c.seed;
  j["output_dir"] = c.output_dir;
  return j.dump(2) + "\n";
}

void validate(const ExperimentConfig& c) {
  if (!(c.m > 1.0)) throw ConfigInvalid("m", "must exceed 1");
  try {
    c.curvature.validate();
  } catch (const InvalidArgument& e) {
    throw ConfigInvalid("curvature", e.what());
  }
  const bool flat = c.curvature.variant == Variant::Flat;
  if (c.scenario == Scenario::EuclideanSanity && !flat)
    throw ConfigInvalid("curvature.variant", "EuclideanSanity needs Flat");
  if (c.scenario != Scenario::EuclideanSanity && flat)
    throw ConfigInvalid("curvature.variant", to_string(c.scenario) + " needs a curved model");
  if (c.scenario != Scenario::EuclideanSanity && c.scenario != Scenario::PsiAsymptotics &&
      !(c.curvature.mu > 1.0))
    throw ConfigInvalid("curvature.mu", "must exceed 1");
  if (c.scenario == Scenario::WeightedTransform && c.curvature.n < 3)
    throw ConfigInvalid("curvature.n", "WeightedTransform needs n >= 3");
  if (c.output_dir.empty()) throw ConfigInvalid("output_dir", "empty");

  if (is_flow(c.scenario)) {
    const auto& b = c.bump;
    if (!(b.height > 0)) throw ConfigInvalid("bump.height", "must be positive");
    if (!(b.width_lo > 0) || !(b.width_hi >= b.width_lo))
      throw ConfigInvalid("bump.width", "need 0 < lo <= hi");
    if (!(b.center_lo >= 0) || !(b.center_hi >= b.center_lo))
      throw ConfigInvalid("bump.center", "need 0 <= lo <= hi");
    const double L = c.scenario == Scenario::WeightedTransform ? c.aux_grid.L : c.grid.L;
    if (!(b.center_hi + b.width_hi < L))
      throw ConfigInvalid("bump", "support must end inside the grid");
    if (c.scenario != Scenario::WeightedTransform) {
      if (!(c.flow.t_end > 0) || !(c.flow.t_first > 0) || !(c.flow.t_first < c.flow.t_end))
        throw ConfigInvalid("flow", "need 0 < t_first < t_end");
      if (c.flow.per_decade < 1) throw ConfigInvalid("flow.per_decade", "must be >= 1");
    } else if (!(c.flow.t_end > 0)) {
      throw ConfigInvalid("flow.t_end", "must be positive");
    }
    if (!(c.flow.stepping.dt_init > 0) || !(c.flow.stepping.dt_ratio > 0))
      throw ConfigInvalid("flow", "dt_init and dt_ratio must be positive");
  }
  if (c.scenario == Scenario::EllipticNonUnique) {
    if (c.alphas.empty()) throw ConfigInvalid("alphas", "empty");
    for (double a : c.alphas)
      if (!(a > 0)) throw ConfigInvalid("alphas", "entries must be positive");
  }
  const bool needs_balls = c.scenario == Scenario::EllipticMinimal ||
                           c.scenario == Scenario::EllipticNonUnique ||
                           c.scenario == Scenario::FlowConvergence;
  if (needs_balls) {
    const double Lb = c.scenario == Scenario::FlowConvergence ? c.aux_grid.L : c.grid.L;
    if (c.ball_radii.size() < 2) throw ConfigInvalid("ball_radii", "need at least two radii");
    for (std::size_t i = 0; i < c.ball_radii.size(); ++i) {
      if (!(c.ball_radii[i] > 0) || c.ball_radii[i] > Lb * (1 + 1e-12))
        throw ConfigInvalid("ball_radii", "radii must lie in (0, L]");
      if (i > 0 && !(c.ball_radii[i] > c.ball_radii[i - 1]))
        throw ConfigInvalid("ball_radii", "must increase");
    }
    if (!(c.ball_tol > 0)) throw ConfigInvalid("ball_tol", "must be positive");
  }
  if (c.window_lo != 0.0 || c.window_hi != 0.0)
    if (!(c.window_lo > 0) || !(c.window_hi > c.window_lo))
      throw ConfigInvalid("window", "need 0 < lo < hi");
}

BumpDraw draw_bump(const ExperimentConfig& cfg) {
  std::mt19937_64 gen(cfg.seed);
  // raw 53-bit draws: the std distributions are not portable across libraries
  auto unit = [&] { return double(gen() >> 11) * 0x1.0p-53; };
  BumpDraw d;
  const auto& b = cfg.bump;
  d.center = b.center_lo + (b.center_hi - b.center_lo) * unit();
  d.width = b.width_lo + (b.width_hi - b.width_lo) * unit();
  return d;
}

RadialField make_bump(const RadialGrid& g, double height, BumpDraw d) {
  RadialField u(g, 0.0);
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double x = (g.r[i] - d.center) / d.width;
    if (std::abs(x) < 1.0) u[i] = height * (1.0 - x * x);
  }
  return u;
}

// ---------------------------------------------------------------- report rows

std::string to_string(Compare c) {
  switch (c) {
    case Compare::Abs: return "abs";
    case Compare::Rel: return "rel";
    case Compare::AtMost: return "at_most";
    case Compare::AtLeast: return "at_least";
    case Compare::Info: return "info";
  }
  return "?";
}

namespace {

Compare compare_from_string(const std::string& s) {
  for (Compare c : {Compare::Abs, Compare::Rel, Compare::AtMost, Compare::AtLeast, Compare::Info})
    if (to_string(c) == s) return c;
  throw InvalidArgument("unknown comparison '" + s + "'");
}

}  // namespace

bool evaluate(const ReportRow& row) {
  if (row.compare == Compare::Info || !row.target) return true;
  const double x = row.measured, t = *row.target, tol = row.tolerance;
  if (std::isnan(x)) return false;
  switch (row.compare) {
    case Compare::Abs: return std::abs(x - t) <= tol;
    case Compare::Rel: return std::abs(x - t) <= tol * std::abs(t);
    case Compare::AtMost: return x <= t + tol;
    case Compare::AtLeast: return x >= t - tol;
    case Compare::Info: return true;
  }
  return false;
}

ReportRow make_row(std::string quantity, double measured, std::optional<double> target,
                   double tolerance, Compare compare, std::string source) {
  ReportRow r;
  r.quantity = std::move(quantity);
  r.measured = measured;
  r.target = compare == Compare::Info ? std::nullopt : target;
  r.tolerance = tolerance;
  r.compare = compare;
  r.source = std::move(source);
  r.pass = evaluate(r);
  return r;
}

namespace {

ReportRow info(std::string q, double x, std::string source) {
  return make_row(std::move(q), x, std::nullopt, 0.0, Compare::Info, std::move(source));
}

// shortest round-trip form, as the JSON writer prints it
std::string num_text(double x) {
  json j = x;
  return j.dump();
}

}  // namespace

std::string report_json(const std::string& scenario, const std::vector<ReportRow>& rows) {
  if (rows.empty()) throw InvalidArgument("report has no rows");
  json j;
  j["scenario"] = scenario;
  int failed = 0;
  for (const auto& r : rows) failed += r.pass ? 0 : 1;
  j["status"] = failed == 0 ? "pass" : "fail";
  j["failed_rows"] = failed;
  json arr = json::array();
  for (const auto& r : rows) {
    json o;
    o["quantity"] = r.quantity;
    o["measured"] = r.measured;
    if (r.target) o["target"] = *r.target;
    else o["target"] = "n/a";
    o["tolerance"] = r.tolerance;
    o["compare"] = to_string(r.compare);
    o["pass"] = r.pass;
    o["source"] = r.source;
    arr.push_back(o);
  }
  j["rows"] = arr;
  return j.dump(2) + "\n";
}

std::string report_table(const std::vector<ReportRow>& rows) {
  if (rows.empty()) throw InvalidArgument("report has no rows");
  std::vector<std::array<std::string, 6>> cells;
  cells.push_back({"quantity", "measured", "target", "tolerance", "check", "pass"});
  for (const auto& r : rows)
    cells.push_back({r.quantity, num_text(r.measured), r.target ? num_text(*r.target) : "n/a",
                     r.compare == Compare::Info ? "" : num_text(r.tolerance),
                     to_string(r.compare), r.pass ? "PASS" : "FAIL"});
  std::array<std::size_t, 6> w{};
  for (const auto& row : cells)
    for (std::size_t k = 0; k < 6; ++k) w[k] = std::max(w[k], row[k].size());
  std::ostringstream out;
  for (const auto& row : cells) {
    for (std::size_t k = 0; k < 6; ++k) {
      out << row[k];
      if (k + 1 < 6) out << std::string(w[k] - row[k].size() + 2, ' ');
    }
    out << "\n";
  }
  return out.str();
}

namespace {

void write_text(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw IoError("cannot write '" + p.string() + "'");
  out << text;
  if (!out) throw IoError("write failed for '" + p.string() + "'");
}

}  // namespace

int emit_report(const std::string& dir, const std::string& scenario,
                const std::vector<ReportRow>& rows) {
  const std::string js = report_json(scenario, rows);
  const std::string tab = report_table(rows);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create '" + dir + "': " + ec.message());
  write_text(fs::path(dir) / "report.json", js);
  write_text(fs::path(dir) / "report.txt", tab);
  for (const auto& r : rows)
    if (!r.pass) return 1;
  return 0;
}

std::vector<ReportRow> read_report(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read report '" + path + "'");
  json j;
  try {
    j = json::parse(in);
    std::vector<ReportRow> rows;
    for (const auto& o : j.at("rows")) {
      std::optional<double> target;
      if (o.at("target").is_number()) target = o.at("target").get<double>();
      rows.push_back(make_row(o.at("quantity").get<std::string>(),
                              o.at("measured").get<double>(), target,
                              o.at("tolerance").get<double>(),
                              compare_from_string(o.at("compare").get<std::string>()),
                              o.at("source").get<std::string>()));
    }
    if (rows.empty()) throw InvalidArgument("report has no rows");
    return rows;
  } catch (const json::exception& e) {
    throw InvalidArgument("malformed report '" + path + "': " + e.what());
  }
}

std::string resolve_output_dir(const std::string& dir) {
  fs::path p(dir);
  if (p.is_absolute()) return p.string();
  if (const char* root = std::getenv(kOutputRootEnv); root && *root)
    return (fs::path(root) / p).string();
  return p.string();
}

// ---------------------------------------------------------------- scenarios

namespace {

struct Context {
  const ExperimentConfig& cfg;
  fs::path dir;
  std::vector<ReportRow> rows;
  std::vector<std::string> files;

  std::string file(const std::string& name) {
    files.push_back(name);
    return (dir / name).string();
  }
  void text(const std::string& name, const std::string& body) { write_text(file(name), body); }
  void add(ReportRow r) { rows.push_back(std::move(r)); }
};

BallSchedule schedule(const ExperimentConfig& c) {
  BallSchedule s;
  s.radii = c.ball_radii;
  s.tol = c.ball_tol;
  return s;
}

std::vector<double> snapshot_times(const FlowSettings& f) {
  auto t = log_spaced_times(f.t_first, f.t_end, f.per_decade);
  t.insert(t.begin(), 0.0);
  return t;
}

FlowResult flow_from(const ModelFunction& mf, const ExperimentConfig& c, const RadialField& u0) {
  FlowConfig fc;
  fc.mf = mf;
  fc.m = c.m;
  fc.u0 = u0;
  fc.t_end = c.flow.t_end;
  fc.snapshots = snapshot_times(c.flow);
  fc.stepping = c.flow.stepping;
  return run_flow(fc);
}

void write_flow(Context& ctx, const FlowResult& res) {
  write_series_csv(ctx.file("series.csv"), res);
  ctx.text("flow_diagnostics.json", diagnostics_to_json(res) + "\n");
  write_snapshot_csvs((ctx.dir / "snapshots").string(), res);
  ctx.files.push_back("snapshots/");
}

double window_or(double w, double dflt) { return w > 0.0 ? w : dflt; }

void psi_asymptotics(Context& ctx) {
  const auto& c = ctx.cfg;
  auto mf = build_psi(c.curvature, c.grid.build());
  write_model_csv(ctx.file("model.csv"), mf);
  // outermost window where psi is still representable
  const double L = std::min(mf.grid.L, mf.r_safe());
  const double lo = window_or(c.window_lo, 0.99 * L), hi = window_or(c.window_hi, L);
  auto est = asymptotic_ratio(mf, lo, hi);
  ctx.add(make_row("psi'/(r^mu psi) on outer window", est.estimate, std::sqrt(c.curvature.Q), 0.02,
                   Compare::Rel, "asymptotic_ratio.estimate"));
  ctx.add(info("max |ratio - sqrt Q| on window", est.deviation, "asymptotic_ratio.deviation"));
  ctx.add(info("window lo", lo, "config.window"));
  ctx.add(info("window hi", hi, "config.window"));
}

void elliptic_minimal(Context& ctx) {
  const auto& c = ctx.cfg;
  auto mf = build_psi(c.curvature, c.grid.build());
  auto balls = minimal_solution(mf, c.m, schedule(c));
  auto pic = picard_tail_iteration(mf, c.m, RadialField(mf.grid, 0.5));
  write_elliptic_csv(ctx.file("minimal_balls.csv"), balls);
  write_elliptic_csv(ctx.file("minimal_picard.csv"), pic);

  const double lo = window_or(c.window_lo, 16.0), hi = window_or(c.window_hi, 64.0);
  auto tb = tail_estimate(balls, lo, hi);
  auto tp = tail_estimate(pic, lo, hi);
  ctx.text("tail.json", tail_to_json(tb) + "\n");
  const double expo = -(c.curvature.mu - 1.0) / (c.m - 1.0);
  ctx.add(make_row("tail constant", tb.constant_fit, tb.target, 0.10, Compare::Rel,
                   "tail_estimate(DirichletBalls).constant_fit"));
  ctx.add(make_row("tail exponent", tb.exponent_fit, expo, 0.05, Compare::Rel,
                   "tail_estimate(DirichletBalls).exponent_fit"));
  ctx.add(make_row("tail constant (integral route)", tp.constant_fit, tp.target, 0.10,
                   Compare::Rel, "tail_estimate(PicardIntegral).constant_fit"));

  const double core = mf.grid.L / 4.0;
  double d = 0.0;
  for (std::size_t i = 0; i < mf.size() && mf.r(i) <= core; ++i)
    d = std::max(d, std::abs(balls.v[i] - pic.v[i]));
  ctx.add(make_row("balls vs integral sup on core", d, 0.0, 1e-4, Compare::AtMost,
                   "minimal_solution, picard_tail_iteration"));
  ctx.add(info("last ball increment",
               balls.increments.empty() ? 0.0 : balls.increments.back(),
               "minimal_solution.increments"));
  ctx.add(make_row("max residual (integral route)", pic.max_residual, 0.0, 1e-10,
                   Compare::AtMost, "picard_tail_iteration.max_residual"));

  // elliptic sandwich with eps = 0.1, support of the sub inside L/2
  auto sup = find_elliptic_super(mf, c.m);
  const double eps = 0.1;
  const double r0 = find_elliptic_sub(mf, c.m, eps, 0.0).r0;
  const double delta = 1.0001 / std::hypot(mf.grid.L / 2.0, r0);
  auto sub = find_elliptic_sub(mf, c.m, eps, delta);
  auto hi_b = eval_elliptic_barrier(sup, mf.grid), lo_b = eval_elliptic_barrier(sub, mf.grid);
  int viol = 0;
  for (std::size_t i = 0; i < mf.size(); ++i)
    viol += (lo_b[i] > balls.v[i]) + (balls.v[i] > hi_b[i]);
  ctx.add(make_row("elliptic sandwich violations", viol, 0.0, 0.0, Compare::AtMost,
                   "find_elliptic_super, find_elliptic_sub, eval_elliptic_barrier"));
  ctx.add(make_row("super feasibility margin", check_elliptic_feasibility(sup, mf).worst_margin,
                   0.0, 0.0, Compare::AtLeast, "check_elliptic_feasibility(Super)"));
  ctx.add(make_row("sub feasibility margin", check_elliptic_feasibility(sub, mf).worst_margin,
                   0.0, 0.0, Compare::AtLeast, "check_elliptic_feasibility(Sub)"));
  json bj;
  bj["super"] = {{"C", sup.C}, {"r0", sup.r0}};
  bj["sub"] = {{"C", sub.C}, {"r0", sub.r0}, {"eps", eps}, {"delta", delta}};
  ctx.text("elliptic_barriers.json", bj.dump(2) + "\n");
}

void elliptic_non_unique(Context& ctx) {
  const auto& c = ctx.cfg;
  auto mf = build_psi(c.curvature, c.grid.build());
  auto v = minimal_solution(mf, c.m, schedule(c));
  write_elliptic_csv(ctx.file("minimal.csv"), v);
  auto W = find_supersolution_W(mf);
  ctx.add(make_row("W worst defect", W.worst_defect, 0.0, 0.0, Compare::AtLeast,
                   "find_supersolution_W.worst_defect"));
  for (double a : c.alphas) {
    auto va = solve_v_alpha(mf, c.m, a, schedule(c));
    std::ostringstream tag;
    tag << "alpha=" << num_text(a);
    write_elliptic_csv(ctx.file("v_alpha_" + num_text(a) + ".csv"), va);
    double below = std::numeric_limits<double>::infinity();
    auto env = alpha_envelope(W, c.m, a);
    double above_env = 0.0;
    for (std::size_t i = 0; i < mf.size(); ++i) {
      below = std::min(below, (va.v[i] - std::max(a, v.v[i])) / a);
      above_env = std::max(above_env, (va.v[i] - env[i]) / a);
    }
    ctx.add(make_row(tag.str() + " min (v_a - max(a, v))/a", below, 0.0, 1e-12,
                     Compare::AtLeast, "solve_v_alpha, minimal_solution"));
    const double far = va.v.at(0.9 * mf.grid.L);
    ctx.add(make_row(tag.str() + " v_a(0.9 L)/a", far / a, 1.0, 0.02, Compare::Abs,
                     "solve_v_alpha"));
    ctx.add(make_row(tag.str() + " max (v_a - envelope)/a", above_env, 0.0, 1e-12,
                     Compare::AtMost, "alpha_envelope"));
  }
}

// minimal solution carried to the flow grid: a ball problem with its value at L
EllipticSolution reference_v(const ExperimentConfig& c, const ModelFunction& mf) {
  auto big = build_psi(c.curvature, c.aux_grid.build());
  auto vb = minimal_solution(big, c.m, schedule(c));
  return solve_dirichlet_ball(mf, mf.grid.L, c.m, vb.v.at(mf.grid.L));
}

void flow_convergence(Context& ctx) {
  const auto& c = ctx.cfg;
  auto mf = build_psi(c.curvature, c.grid.build());
  const auto d = draw_bump(c);
  auto u0 = make_bump(mf.grid, c.bump.height, d);
  auto v = reference_v(c, mf);
  write_elliptic_csv(ctx.file("v_reference.csv"), v);
  auto res = flow_from(mf, c, u0);
  write_flow(ctx, res);

  const double s0 = u0.sup();
  ctx.add(info("bump width", d.width, "draw_bump"));
  ctx.add(info("bump center", d.center, "draw_bump"));
  const double t0 = measured_shift(u0, v.v, c.m);
  ctx.add(info("measured shift t0", t0, "measured_shift"));
  ctx.add(make_row("universal bound excess / |u0|", universal_bound_check(res, v, t0) / s0, 0.0,
                   1e-6, Compare::AtMost, "universal_bound_check"));
  ctx.add(make_row("Benilan-Crandall min slack / |u0|",
                   res.diagnostics.benilan_crandall_min_slack / s0, 0.0, 1e-6, Compare::AtLeast,
                   "run_flow.diagnostics.benilan_crandall_min_slack"));
  ctx.add(make_row("rescaled monotonicity min slack / |u0|",
                   res.diagnostics.rescaled_monotonicity_min_slack / s0, 0.0, 1e-6,
                   Compare::AtLeast, "run_flow.diagnostics.rescaled_monotonicity_min_slack"));

  auto cm = convergence_metric(res, v);
  const double vs = v.v.sup();
  {
    std::ofstream out(ctx.file("convergence.csv"));
    out << "t,metric,relative\n" << std::setprecision(17);
    for (const auto& [t, e] : cm) out << t << "," << e << "," << e / vs << "\n";
  }
  // the last three decades end at the last snapshot
  const double t_last = cm.back().first;
  int rises = 0;
  double prev = -1.0;
  for (const auto& [t, e] : cm) {
    if (t < t_last / 1e3 * (1 - 1e-9)) continue;
    if (prev >= 0.0 && !(e < prev)) ++rises;
    prev = e;
  }
  ctx.add(make_row("metric increases over the last three decades", rises, 0.0, 0.0,
                   Compare::AtMost, "convergence_metric"));
  double at = std::nan("");
  for (const auto& [t, e] : cm)
    if (std::abs(t - 1e6) <= 1e-6 * 1e6) at = e / vs;
  ctx.add(make_row("relative metric at t = 1e6", at, 0.0, 0.05, Compare::AtMost,
                   "convergence_metric"));
  ctx.add(info("relative metric at the last snapshot", cm.back().second / vs,
               "convergence_metric"));
}

struct BarrierRun {
  ModelFunction mf;
  FlowResult res;
  RadialField u0;
  BumpDraw draw;
  BarrierParams up, lo;
  double T = 0.0, I = 0.0;
};

BarrierRun barrier_run(const ExperimentConfig& c) {
  BarrierRun b;
  b.mf = build_psi(c.curvature, c.grid.build());
  b.draw = draw_bump(c);
  b.u0 = make_bump(b.mf.grid, c.bump.height, b.draw);
  b.res = flow_from(b.mf, c, b.u0);

  auto v = solve_dirichlet_ball(b.mf, b.mf.grid.L, c.m);
  UpperInputs ui;
  ui.m = c.m;
  ui.mu = c.curvature.mu;
  ui.beta = drift_beta(b.mf);
  ui.u0 = b.u0;
  ui.t_ref = c.flow.t_end;
  ui.tau = measured_shift(b.u0, v.v, c.m);
  ui.M = 0.0;
  for (std::size_t i = 0; i < b.mf.size() && b.mf.r(i) <= 1.0; ++i) ui.M = std::max(ui.M, v.v[i]);
  b.up = find_upper_params(ui);

  // U grows in t, so a later T gives a larger I; T ranges over the snapshots in
  // [1, window start] and the one pushing the front out furthest at t_end wins
  LowerInputs li;
  li.m = c.m;
  li.mu = c.curvature.mu;
  li.beta_hat = drift_beta_hat(b.mf);
  li.t_ref = c.flow.t_end;
  const double T_max = std::max(1.0, window_or(c.window_lo, 1e4));
  double best = -std::numeric_limits<double>::infinity();
  for (const auto& s : b.res.snapshots) {
    if (s.t < 1.0 || s.t > T_max * (1 + 1e-9)) continue;
    auto U = rescaled_profile(b.res, s.t);
    double I = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < b.mf.size() && b.mf.r(i) <= 1.0; ++i) I = std::min(I, U.U[i]);
    if (!(I > 0.0)) continue;
    li.I = I;
    li.T = s.t;
    auto p = find_lower_params(li);
    const double f = barrier_front(p, c.flow.t_end);
    if (f > best) {
      best = f;
      b.lo = p;
      b.T = s.t;
      b.I = I;
    }
  }
  if (!(b.T > 0.0)) throw NoFeasibleParams("flow never covers B_1 for the lower barrier");
  return b;
}

void barrier_json(Context& ctx, const BarrierRun& b) {
  ctx.text("upper_params.json", to_json(b.up) + "\n");
  ctx.text("lower_params.json", to_json(b.lo) + "\n");
}

void support_law(Context& ctx) {
  const auto& c = ctx.cfg;
  auto b = barrier_run(c);
  write_flow(ctx, b.res);
  barrier_json(ctx, b);
  ctx.add(info("bump width", b.draw.width, "draw_bump"));
  const double lo = window_or(c.window_lo, 1e4), hi = window_or(c.window_hi, 1e8);
  std::vector<double> x, y;
  int outside = 0;
  {
    std::ofstream out(ctx.file("fronts.csv"));
    out << "t,support_radius,lower_front,upper_front\n" << std::setprecision(17);
    for (const auto& p : b.res.series) {
      if (p.t <= 0.0) continue;
      const double fl = barrier_front(b.lo, p.t), fu = barrier_front(b.up, p.t);
      out << p.t << "," << p.support_radius << "," << fl << "," << fu << "\n";
      if (p.t >= b.T && (p.support_radius < fl || p.support_radius > fu)) ++outside;
      if (p.t >= lo * (1 - 1e-9) && p.t <= hi * (1 + 1e-9)) {
        x.push_back(std::log(p.t));
        y.push_back(p.support_radius);
      }
    }
  }
  if (x.size() < 3) throw WindowTooNarrow("support-law window holds fewer than 3 snapshots");
  const double slope = log_log_slope(x, y);
  ctx.add(make_row("slope of log R against log log t", slope, 1.0 / (1.0 + c.curvature.mu), 0.15,
                   Compare::Rel, "FlowResult.series.support_radius, log_log_slope"));
  ctx.add(make_row("snapshots with R outside the barrier fronts", outside, 0.0, 0.0,
                   Compare::AtMost, "barrier_front(Upper, Lower), FlowResult.series"));
  const double f_end = barrier_front(b.up, c.flow.t_end);
  ctx.add(make_row("upper front at t_end / L", f_end / b.mf.grid.L, 0.8, 0.0, Compare::AtMost,
                   "barrier_front(Upper)"));
  ctx.add(info("lower front at t_end", barrier_front(b.lo, c.flow.t_end), "barrier_front(Lower)"));
  ctx.add(info("lower barrier start time T", b.T, "rescaled_profile"));
  ctx.add(info("I = min U(., T) on B_1", b.I, "rescaled_profile"));
}

void barrier_sandwich(Context& ctx) {
  const auto& c = ctx.cfg;
  auto b = barrier_run(c);
  write_flow(ctx, b.res);
  barrier_json(ctx, b);
  Region reg;
  reg.r_lo = 1.0;
  reg.r_hi = b.mf.grid.L;
  for (const auto& s : b.res.snapshots) reg.times.push_back(s.t);
  auto ru = verify_differential_inequality(b.up, b.mf, reg);
  auto rl = verify_differential_inequality(b.lo, b.mf, reg);
  ctx.text("upper_feasibility.json", to_json(ru) + "\n");
  ctx.text("lower_feasibility.json", to_json(rl) + "\n");
  ctx.add(make_row("upper residual worst margin", ru.worst_margin, 0.0, 0.0, Compare::AtLeast,
                   "verify_differential_inequality(Upper)"));
  ctx.add(make_row("lower residual worst margin", rl.worst_margin, 0.0, 0.0, Compare::AtLeast,
                   "verify_differential_inequality(Lower)"));
  int up_viol = 0, lo_viol = 0, lo_active = 0;
  for (const auto& s : b.res.snapshots)
    for (std::size_t i = 0; i < b.mf.size(); ++i) {
      const double r = b.mf.r(i);
      if (r < 1.0) continue;
      if (s.u[i] > eval_parabolic_barrier(b.up, r, s.t)) ++up_viol;
      if (s.t < b.T) continue;
      const double lo = eval_parabolic_barrier(b.lo, r, s.t);
      lo_active += lo > 0.0;
      if (s.u[i] < lo) ++lo_viol;
    }
  ctx.add(make_row("nodes above the upper barrier", up_viol, 0.0, 0.0, Compare::AtMost,
                   "eval_parabolic_barrier(Upper), run_flow snapshots"));
  ctx.add(make_row("nodes below the lower barrier (t >= T)", lo_viol, 0.0, 0.0, Compare::AtMost,
                   "eval_parabolic_barrier(Lower), run_flow snapshots"));
  ctx.add(info("nodes where the lower barrier is positive", lo_active,
               "eval_parabolic_barrier(Lower)"));
  ctx.add(info("lower barrier start time T", b.T, "rescaled_profile"));
}

void weighted_transform(Context& ctx) {
  const auto& c = ctx.cfg;
  // Euclidean control
  {
    auto flat = build_change_of_variables(
        build_psi(CurvatureSpec::flat(c.curvature.n), RadialGrid::uniform(10.0, 1000)));
    double e = 0.0;
    for (std::size_t i = 1; i < flat.size(); ++i) e = std::max(e, std::abs(std::expm1(flat.log_rho[i])));
    ctx.add(make_row("Euclidean max |rho - 1|", e, 0.0, 1e-10, Compare::AtMost,
                     "build_change_of_variables(Flat)"));
  }
  auto mf = build_psi(c.curvature, c.grid.build());
  auto cv = build_change_of_variables(mf);
  write_change_of_variables_csv(ctx.file("change_of_variables.csv"), cv);
  WeightWindow w = outer_window(cv);
  if (c.window_lo > 0.0) w = {c.window_lo, c.window_hi};
  auto fit = fit_weight(cv, w);
  ctx.text("weight_fit.json", to_json(fit) + "\n");
  ctx.add(make_row("fitted nu", fit.nu_fit, 1.0, 0.0, Compare::AtLeast, "fit_weight.nu_fit"));
  ctx.add(info("K1", fit.K1_fit, "fit_weight.K1_fit"));
  ctx.add(info("K2", fit.K2_fit, "fit_weight.K2_fit"));
  auto inner = fit_weight(cv, {w.lo / 100.0, w.lo / 10.0});
  ctx.add(make_row("nu on a disjoint inner window", inner.nu_fit, fit.nu_fit, 0.05, Compare::Rel,
                   "fit_weight"));

  auto pic = picard_tail_iteration(mf, c.m, RadialField(mf.grid, 0.5));
  auto V = transform_solution(cv, pic.v);
  auto tail = weighted_minimal_tail(fit, V, c.m, c.curvature.n, w);
  ctx.text("weighted_tail.json", to_json(tail) + "\n");
  ctx.add(info("tail target low", tail.target_low, "weighted_minimal_tail.target_low"));
  ctx.add(info("tail target high", tail.target_high, "weighted_minimal_tail.target_high"));
  ctx.add(make_row("liminf of V (log s)^{(nu-1)/(m-1)}", tail.liminf_const,
                   tail.target_low / 1.2, 0.0, Compare::AtLeast, "weighted_minimal_tail"));
  ctx.add(make_row("limsup of V (log s)^{(nu-1)/(m-1)}", tail.limsup_const,
                   tail.target_high * 1.2, 0.0, Compare::AtMost, "weighted_minimal_tail"));

  // one implicit step of the manifold flow read in s
  auto fm = build_psi(c.curvature, c.aux_grid.build());
  auto fcv = build_change_of_variables(fm);
  auto u0 = make_bump(fm.grid, c.bump.height, draw_bump(c));
  FlowConfig fc;
  fc.mf = fm;
  fc.m = c.m;
  fc.u0 = u0;
  fc.t_end = c.flow.t_end;
  fc.snapshots = {c.flow.t_end};
  fc.stepping = c.flow.stepping;
  auto a = run_flow(fc);
  const double dt = 1e-4;
  FlowConfig step = fc;
  step.u0 = a.snapshots.back().u;
  step.t_end = dt;
  step.snapshots = {dt};
  step.stepping.dt_init = dt;
  auto bres = run_flow(step);
  auto resid = weighted_pme_residual(fcv, step.u0, bres.snapshots.back().u, dt, c.m);
  {
    std::ofstream out(ctx.file("weighted_residual.csv"));
    out << "log_s,residual\n" << std::setprecision(17);
    for (std::size_t i = 0; i < resid.residual.size(); ++i)
      out << resid.log_s[i] << "," << resid.residual[i] << "\n";
  }
  ctx.add(make_row("weighted PME residual (scaled)", resid.worst, 0.0, 1e-4, Compare::AtMost,
                   "weighted_pme_residual"));
}

void euclidean_sanity(Context& ctx) {
  const auto& c = ctx.cfg;
  auto mf = build_psi(c.curvature, c.grid.build());
  const auto d = draw_bump(c);
  auto u0 = make_bump(mf.grid, c.bump.height, d);
  auto res = flow_from(mf, c, u0);
  write_flow(ctx, res);
  ctx.add(info("bump width", d.width, "draw_bump"));
  const double lo = window_or(c.window_lo, 1e2), hi = window_or(c.window_hi, c.flow.t_end);
  std::vector<double> x, y;
  for (const auto& p : res.series)
    if (p.t >= lo * (1 - 1e-9) && p.t <= hi * (1 + 1e-9)) {
      x.push_back(p.t);
      y.push_back(p.sup_norm);
    }
  if (x.size() < 3) throw WindowTooNarrow("decay window holds fewer than 3 snapshots");
  const int n = c.curvature.n;
  ctx.add(make_row("sup-norm decay exponent", log_log_slope(x, y),
                   -1.0 / (c.m - 1.0 + 2.0 / n), 0.05, Compare::Rel,
                   "FlowResult.series.sup_norm, log_log_slope"));
  ctx.add(make_row("mass drift rate", res.diagnostics.max_mass_drift_rate, 0.0, 1e-6,
                   Compare::AtMost, "run_flow.diagnostics.max_mass_drift_rate"));
  ctx.add(info("support radius at t_end", res.series.back().support_radius,
               "FlowResult.series.support_radius"));
}

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& cfg) {
  validate(cfg);
  const std::string dir = resolve_output_dir(cfg.output_dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create '" + dir + "': " + ec.message());

  Context ctx{cfg, fs::path(dir), {}, {}};
  ctx.text("config.json", config_to_json(cfg));
  const std::string name = to_string(cfg.scenario);
  try {
    switch (cfg.scenario) {
      case Scenario::PsiAsymptotics: psi_asymptotics(ctx); break;
      case Scenario::EllipticMinimal: elliptic_minimal(ctx); break;
      case Scenario::EllipticNonUnique: elliptic_non_unique(ctx); break;
      case Scenario::FlowConvergence: flow_convergence(ctx); break;
      case Scenario::SupportLaw: support_law(ctx); break;
      case Scenario::BarrierSandwich: barrier_sandwich(ctx); break;
      case Scenario::WeightedTransform: weighted_transform(ctx); break;
      case Scenario::EuclideanSanity: euclidean_sanity(ctx); break;
    }
  } catch (const ConfigInvalid&) {
    throw;
  } catch (const std::exception& e) {
    throw Error(name + ": " + e.what());
  }

  ExperimentResult out;
  out.scenario = name;
  out.rows = ctx.rows;
  out.status = emit_report(dir, name, ctx.rows);
  out.files = ctx.files;
  out.files.push_back("report.json");
  out.files.push_back("report.txt");
  return out;
}

}  // namespace pmelab
