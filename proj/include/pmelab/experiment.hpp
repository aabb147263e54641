#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "pmelab/grid.hpp"
#include "pmelab/model_manifold.hpp"
#include "pmelab/parabolic.hpp"

namespace pmelab {

enum class Scenario {
  PsiAsymptotics,
  EllipticMinimal,
  EllipticNonUnique,
  FlowConvergence,
  SupportLaw,
  BarrierSandwich,
  WeightedTransform,
  EuclideanSanity
};

std::string to_string(Scenario s);
// throws ConfigInvalid("scenario")
Scenario scenario_from_string(const std::string& s);
const std::vector<Scenario>& all_scenarios();

struct GridSettings {
  Spacing spacing = Spacing::Uniform;
  double L = 10.0;
  std::size_t N = 1000;                           // uniform
  double h0 = 0.01, r_switch = 1.0, rel = 0.01;  // graded
  RadialGrid build() const;
};

struct FlowSettings {
  double t_first = 1.0;  // first nonzero snapshot
  double t_end = 1e8;
  int per_decade = 1;
  Stepping stepping;
};

// A (1 - ((r - c)/w)^2)_+ with c and w drawn from the seed
struct BumpSettings {
  double height = 1.0;
  double center_lo = 0.0, center_hi = 0.0;
  double width_lo = 1.0, width_hi = 1.0;
};

struct ExperimentConfig {
  Scenario scenario = Scenario::EuclideanSanity;
  CurvatureSpec curvature;
  double m = 2.0;
  GridSettings grid;
  // reference grid for the minimal solution (flow scenarios), flow grid (WeightedTransform)
  GridSettings aux_grid;
  FlowSettings flow;
  BumpSettings bump;
  std::vector<double> alphas;      // EllipticNonUnique
  std::vector<double> ball_radii;  // minimal solution schedule
  double ball_tol = 1e-4;
  double window_lo = 0.0, window_hi = 0.0;  // fit window, scenario units; 0 = default
  std::uint64_t seed = 0;
  std::string output_dir = "out";
};

// defaults of the scenario; every field is filled
ExperimentConfig default_config(Scenario s);
// defaults of "scenario" overridden by the file; unknown keys and missing required
// keys throw ConfigInvalid
ExperimentConfig config_from_json(const std::string& text);
ExperimentConfig load_config(const std::string& path);
std::string config_to_json(const ExperimentConfig& cfg);
void validate(const ExperimentConfig& cfg);

// bump center and width after the seed
struct BumpDraw {
  double center = 0.0, width = 0.0;
};
BumpDraw draw_bump(const ExperimentConfig& cfg);
RadialField make_bump(const RadialGrid& g, double height, BumpDraw d);

enum class Compare { Abs, Rel, AtMost, AtLeast, Info };
std::string to_string(Compare c);

struct ReportRow {
  std::string quantity;
  double measured = 0.0;
  std::optional<double> target;  // n/a for Info rows
  double tolerance = 0.0;        // Rel: fraction of |target|
  Compare compare = Compare::Info;
  bool pass = true;
  std::string source;            // operation and diagnostic consumed
};

// Abs |x - t| <= tol, Rel |x - t| <= tol |t|, AtMost x <= t + tol, AtLeast x >= t - tol
bool evaluate(const ReportRow& row);
ReportRow make_row(std::string quantity, double measured, std::optional<double> target,
                   double tolerance, Compare compare, std::string source);

struct ExperimentResult {
  std::string scenario;
  std::vector<ReportRow> rows;
  std::vector<std::string> files;  // relative to the output directory
  int status = 0;                  // 0 all rows pass, 1 otherwise
};

// output root override for relative output directories
inline constexpr const char* kOutputRootEnv = "PMELAB_OUTPUT_ROOT";
std::string resolve_output_dir(const std::string& dir);

ExperimentResult run_experiment(const ExperimentConfig& cfg);

std::string report_json(const std::string& scenario, const std::vector<ReportRow>& rows);
std::string report_table(const std::vector<ReportRow>& rows);
// writes report.json and report.txt; returns 0 when every row passes, 1 otherwise
int emit_report(const std::string& dir, const std::string& scenario,
                const std::vector<ReportRow>& rows);
// rows of a report.json with pass flags recomputed
std::vector<ReportRow> read_report(const std::string& path);

}  // namespace pmelab
