#pragma once

#include <memory>
#include <string>
#include <vector>

#include "pmelab/barriers.hpp"
#include "pmelab/elliptic.hpp"
#include "pmelab/model_manifold.hpp"
#include "pmelab/parabolic.hpp"

namespace pmelab {

struct CvInterp;

// ds/s^{n-1} = dr/psi^{n-1}, s^{2-n} = (n-2) int_r^inf psi^{1-n}
// s leaves the double range quickly when mu > 1, so everything is kept in logs
struct ChangeOfVariables {
  ModelFunction mf;
  std::vector<double> log_s;    // per r-node, -inf at r = 0
  std::vector<double> log_rho;  // rho = (psi/s)^{2(n-1)}, 0 at r = 0

  std::size_t size() const { return log_s.size(); }
  double log_s_at(double r) const;
  double r_of_log_s(double ls) const;
  // log(rho s^2) is interpolated linearly in log s
  double log_rho_at(double ls) const;

  std::shared_ptr<const CvInterp> interp;
};

ChangeOfVariables build_change_of_variables(const ModelFunction& mf);

// columns r, s, rho, log_s, log_rho
void write_change_of_variables_csv(const std::string& path, const ChangeOfVariables& cv);

// interval in log s
struct WeightWindow {
  double lo = 0.0, hi = 0.0;
};

// last decade of log s on the grid
WeightWindow outer_window(const ChangeOfVariables& cv);

struct WeightFit {
  double nu_fit = 0.0;
  double K1_fit = 0.0, K2_fit = 0.0;  // envelope of rho s^2 (log s)^nu
  WeightWindow window;
  double power_fit = 0.0;  // slope of log rho against log s
  bool in_regime = false;  // rho ~ s^{-2} (log s)^{-nu} with nu > 1
  int nodes = 0;
};

// slope of log(rho s^2) against log log s, then the constant envelope;
// nu_fit = K = 0 when rho does not decay like s^{-2}
WeightFit fit_weight(const ChangeOfVariables& cv, WeightWindow window);
std::string to_json(const WeightFit& f);

struct WeightedField {
  std::vector<double> log_s;
  std::vector<double> f;
  std::size_t size() const { return f.size(); }
};

// u(r(s)) on the induced s-grid
WeightedField transform_solution(const ChangeOfVariables& cv, const RadialField& u);
// u(r(s)) at the given log s nodes, monotone in between
WeightedField transform_solution(const ChangeOfVariables& cv, const RadialField& u,
                                 const std::vector<double>& log_s_nodes);

// Delta_s f by five-point differences on the s-grid, mirrored across the origin; NaN on the
// last two nodes and wherever log s exceeds log_s_max
std::vector<double> weighted_laplacian(const ChangeOfVariables& cv, const std::vector<double>& f,
                                       double log_s_max = 200.0);

struct WeightedResidual {
  std::vector<double> log_s;     // checked nodes
  std::vector<double> residual;  // rho u_t - Delta_s u^m over max rho |u_t|
  double worst = 0.0;
};

// one implicit step u_prev -> u_next of length dt, differenced in s; skips r < r_min (the
// radial scheme is only O(h^2/r^2) accurate node-wise near the origin), nodes with log s above
// log_s_max and five cells on each side of the free boundary
WeightedResidual weighted_pme_residual(const ChangeOfVariables& cv, const RadialField& u_prev,
                                       const RadialField& u_next, double dt, double m,
                                       double r_min = 0.25, double log_s_max = 200.0);

struct WeightedBarrierParams {
  double C1 = 0.0, C2 = 0.0, gamma1 = 0.0, gamma2 = 0.0, t0 = 0.0, R0 = 0.0;
  double m = 2.0, nu = 2.0;
  int n = 3;
};
std::string to_json(const WeightedBarrierParams& p);

// C/(t+t0)^{1/(m-1)} [(log s)^{1-nu} - gamma/log(t+t0)^{nu-1}]_+^{1/(m-1)}
double weighted_barrier(double C, double gamma, const WeightedBarrierParams& p, double log_s,
                        double t);

struct WeightedSearchInputs {
  WeightFit fit;       // K1, K2 over s >= R0
  double m = 2.0;
  int n = 3;
  RadialField v;       // elliptic solution on the r-grid
  RadialField u0;
  double tau = 1.0;    // u <= v/(t+tau)^{1/(m-1)}
  // lower barrier data: U(., T) on the flow
  RadialField U_T;
  double T = 1.0;
  double t_ref = 1e8;
};

// monotone scan in log R0; C2 from the boundary and X-term conditions, gamma2 at 99% of its
// bound, the lower pair at the largest C1 and smallest gamma1 allowed
WeightedBarrierParams find_weighted_barrier_params(const ChangeOfVariables& cv,
                                                   const WeightedSearchInputs& in);

// node-wise sandwich on s >= R0 at every snapshot, and the sign of rho u_t - Delta_s u^m for
// both barriers on a sample grid of log s in [log R0, log s_max] with the measured rho
FeasibilityReport check_weighted_barriers(const ChangeOfVariables& cv,
                                          const std::vector<Snapshot>& snapshots,
                                          const WeightedBarrierParams& p);
FeasibilityReport check_weighted_residual(const ChangeOfVariables& cv,
                                          const WeightedBarrierParams& p,
                                          const std::vector<double>& times);

struct WeightedTail {
  double liminf_const = 0.0, limsup_const = 0.0;  // range of V (log s)^{(nu-1)/(m-1)}
  double target_low = 0.0, target_high = 0.0;     // [K/(m(nu-1)(n-2))]^{1/(m-1)}
  WeightWindow window;
};

WeightedTail weighted_minimal_tail(const WeightFit& fit, const WeightedField& V, double m, int n,
                                   WeightWindow window);
std::string to_json(const WeightedTail& t);

}  // namespace pmelab
