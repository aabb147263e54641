#pragma once

#include <string>
#include <utility>
#include <vector>

#include "pmelab/elliptic.hpp"
#include "pmelab/grid.hpp"
#include "pmelab/model_manifold.hpp"

namespace pmelab {

struct Stepping {
  double dt_init = 1e-4;
  double dt_ratio = 1e-3;  // dt <= dt_ratio * t once that exceeds dt_init
  double dt_min = 1e-14;
  int newton_max = 25;
  int newton_fast = 4;     // at most this many iterations lets dt double
  double newton_tol = 1e-11;
};

struct FlowConfig {
  ModelFunction mf;
  double m = 2.0;
  RadialField u0;  // on mf.grid
  double t_end = 1.0;
  std::vector<double> snapshots;
  Stepping stepping;
  double eps_supp = 0.0;  // <= 0 means 1e-10 sup u(t) at each snapshot
};

struct Snapshot {
  double t = 0.0;
  RadialField u;
};

struct SeriesPoint {
  double t, sup_norm, support_radius, mass;
};

struct FlowDiagnostics {
  double benilan_crandall_min_slack = 0.0;
  double rescaled_monotonicity_min_slack = 0.0;
  double max_mass_drift_rate = 0.0;  // relative, per unit time; NaN once psi^{n-1} u overflows
  double outer_wm_integral = 0.0;    // int_0^t u^m at the last interior node
  long steps = 0;
  long newton_iterations = 0;
  int newton_halvings = 0;
};

struct FlowResult {
  ModelFunction mf;
  double m = 2.0;
  double eps_supp = 0.0;  // as configured
  double u0_sup = 0.0;
  std::vector<Snapshot> snapshots;
  std::vector<SeriesPoint> series;  // one point per snapshot
  FlowDiagnostics diagnostics;
};

// u_t = (u^m)_rr + (n-1) psi'/psi (u^m)_r on [0, L), u(L) = 0
FlowResult run_flow(const FlowConfig& cfg);

// largest r with field > eps, interpolated between nodes
double support_radius(const RadialField& field, double eps);

std::vector<double> log_spaced_times(double t_lo, double t_hi, int per_decade);

struct RescaledProfile {
  double tau = 0.0;
  RadialField U;  // t^{1/(m-1)} u(., t), tau = log t
};

RescaledProfile rescaled_profile(const FlowResult& res, double t);

// min over nodes and consecutive snapshot pairs of (u2 - (t1/t2)^{1/(m-1)} u1)/(t2 - t1),
// the integrated form of u_t + u/((m-1)t) >= 0
double benilan_crandall_check(const FlowResult& res);
double benilan_crandall_check(const std::vector<Snapshot>& snaps, double m);
// min over nodes and consecutive pairs with t1 >= t_min of U(t2) - U(t1)
double rescaled_monotonicity_check(const FlowResult& res, double t_min = 0.0);

std::vector<std::pair<double, double>> convergence_metric(const FlowResult& res,
                                                          const EllipticSolution& v);

// smallest t0 with u0 <= v/t0^{1/(m-1)}
double measured_shift(const RadialField& u0, const RadialField& v, double m);
// max over snapshots and nodes of (u - v/(t+t0)^{1/(m-1)})_+
double universal_bound_check(const FlowResult& res, const EllipticSolution& v, double t0);
// max over snapshots with t >= t_min of sup u * t^{1/(m-1)} - sup v
double absolute_bound_excess(const FlowResult& res, const EllipticSolution& v, double t_min);

// (t, V(t) t^{-1/(m-1)}) with V the volume of the support ball, angular constant dropped
std::vector<std::pair<double, double>> volume_lower_bound_check(const FlowResult& res);

// least-squares slope of log y against log x
double log_log_slope(const std::vector<double>& x, const std::vector<double>& y);

void write_snapshot_csvs(const std::string& dir, const FlowResult& res);
void write_series_csv(const std::string& path, const FlowResult& res);
std::string diagnostics_to_json(const FlowResult& res);

}  // namespace pmelab
