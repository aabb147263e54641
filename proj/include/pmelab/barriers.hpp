#pragma once

#include <string>
#include <vector>

#include "pmelab/grid.hpp"
#include "pmelab/model_manifold.hpp"

namespace pmelab {

enum class EllipticKind { Super, Sub };

struct EllipticBarrierParams {
  EllipticKind kind = EllipticKind::Super;
  double C = 1.0;
  double r0 = 1.0;
  double m = 2.0, mu = 2.0, Q = 1.0;
  int n = 3;
  double eps = 0.0, delta = 0.0;  // Sub only
};

// C^{m-1} = 1/(m (mu-1)(n-1) sqrt(Q+eps))
double sub_constant(double m, double mu, int n, double Q, double eps);
EllipticBarrierParams make_sub(double m, double mu, int n, double Q, double eps, double delta,
                               double r0);

struct Witness {
  double r = 0.0, t = 0.0, margin = 0.0;
  std::string what;
};

struct FeasibilityReport {
  bool satisfied = false;
  double worst_margin = 0.0;
  std::vector<Witness> witnesses;  // worst first
};

std::string to_json(const FeasibilityReport& rep);

// Super: C/(r^2+r0^2)^{(mu-1)/(2(m-1))}
// Sub:   C [(r^2+r0^2)^{-(mu-1)/2} - delta]_+^{1/(m-1)}
RadialField eval_elliptic_barrier(const EllipticBarrierParams& p, const RadialGrid& grid);

// drift constants on r >= 1: 0.95 inf and 1.05 sup of drift/r^mu over the grid
double drift_beta(const ModelFunction& mf);
double drift_beta_hat(const ModelFunction& mf);

// Sub: inner radius beyond which drift <= (n-1) sqrt(Q+eps) r^mu, and max r*drift inside it
struct SubDriftConstants {
  double R_low = 0.0;
  double alpha = 0.0;
};
SubDriftConstants sub_drift_constants(const ModelFunction& mf, double eps);

// Super: the pointwise inequalities on (0,1) and [1,L] plus their closed forms at r = 1.
// Sub: the two printed sufficient conditions.
// Both: the direct residual of -Delta v^m vs v/(m-1) with the actual drift.
FeasibilityReport check_elliptic_feasibility(const EllipticBarrierParams& p,
                                             const ModelFunction& mf);

// smallest r0 on a scan (and C from the closed forms) making Super feasible
EllipticBarrierParams find_elliptic_super(const ModelFunction& mf, double m);
// smallest r0 making Sub feasible for the given eps, delta
EllipticBarrierParams find_elliptic_sub(const ModelFunction& mf, double m, double eps,
                                        double delta);

enum class ParabolicKind { Upper, Lower };

struct BarrierParams {
  ParabolicKind kind = ParabolicKind::Upper;
  double C = 1.0, gamma = 1.0, r0 = 1.0, t0 = 2.0;
  double m = 2.0, mu = 2.0;
  // chain constants used by the search
  double beta = 0.0, k1 = 0.0, k2 = 0.0;
};

std::string to_json(const BarrierParams& p);

// C/(t+t0)^{1/(m-1)} [1/(r+r0)^{mu-1} - gamma/log(t+t0)^{(mu-1)/(mu+1)}]_+^{1/(m-1)}
double eval_parabolic_barrier(const BarrierParams& p, double r, double t);
// r where the bracket vanishes; may be negative
double barrier_front(const BarrierParams& p, double t);

struct UpperInputs {
  double m = 2.0, mu = 2.0;
  double beta = 0.0;    // drift lower constant on r >= 1
  RadialField u0;       // initial datum
  double M = 0.0;       // u <= M/(t+tau)^{1/(m-1)} on B_1
  double tau = 1.0;
  double t_ref = 1e8;   // t0 is picked to pull the front in at this time
};

struct LowerInputs {
  double m = 2.0, mu = 2.0;
  double beta_hat = 0.0;  // drift upper constant on r >= 1
  double I = 0.0;         // u >= I/t^{1/(m-1)} on B_1 for t >= T
  double T = 1.0;
  double t_ref = 1e8;     // r0 is picked to push the front out at this time
};

BarrierParams find_upper_params(const UpperInputs& in);
BarrierParams find_lower_params(const LowerInputs& in);

struct Region {
  double r_lo = 1.0, r_hi = 0.0;  // r_hi <= 0 means grid end
  std::vector<double> times;
  double shell = 1e-3;  // relative band around the front left out
};

// u_t - (u^m)_rr - drift (u^m)_r with analytic derivatives and the grid's drift;
// Upper needs >= 0, Lower <= 0 (margins are scaled by the sum of term sizes)
FeasibilityReport verify_differential_inequality(const BarrierParams& p, const ModelFunction& mf,
                                                 const Region& region);

}  // namespace pmelab
