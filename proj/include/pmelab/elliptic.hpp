#pragma once

#include <string>
#include <vector>

#include "pmelab/grid.hpp"
#include "pmelab/model_manifold.hpp"

namespace pmelab {

enum class EllipticMethod { DirichletBalls, PicardIntegral, ParabolicLimit };

std::string to_string(EllipticMethod m);

// per-interval weights of the flux recurrence
//   J_{j+1} = E_j J_j + a_j v_j + b_j v_{j+1},  J = psi^{1-n} int_0^r psi^{n-1} v
struct FluxWeights {
  std::vector<double> E, a, b;
};

FluxWeights flux_weights(const ModelFunction& mf);

struct EllipticSolution {
  ModelFunction mf;
  double m = 2.0;
  EllipticMethod method = EllipticMethod::DirichletBalls;
  RadialField v;         // zero beyond the ball radius
  RadialField residual;  // per-node defect of the discrete equation, scaled by v(0)^m
  double max_residual = 0.0;
  double radius = 0.0;   // ball radius, or L for the integral route
  int iterations = 0;
  // sup-norm change on the core between successive balls
  std::vector<double> increments;
};

// (psi^{n-1} (v^m)')' = -psi^{n-1} v/(m-1) on [0, k], v(k) = boundary
EllipticSolution solve_dirichlet_ball(const ModelFunction& mf, double k, double m,
                                      double boundary = 0.0);

struct BallSchedule {
  std::vector<double> radii;
  double tol = 1e-4;
  double core = 0.0;  // <= 0 means L/4
};

// k -> infinity limit along the schedule
EllipticSolution minimal_solution(const ModelFunction& mf, double m, const BallSchedule& s);

struct PicardOptions {
  double tol = 1e-12;
  int max_iter = 500;
};

// fixed point of v^m(r) = 1/(m-1) int_r^inf psi^{1-n} int_0^t psi^{n-1} v ds dt,
// truncated at L with a power-law tail fitted on the last decade
EllipticSolution picard_tail_iteration(const ModelFunction& mf, double m,
                                       const RadialField& v_init,
                                       const PicardOptions& opt = {});

struct TailEstimate {
  double exponent_fit = 0.0;
  double constant_fit = 0.0;  // geometric mean of r^{(mu-1)/(m-1)} v over the window
  double target = 0.0;        // [m (mu-1)(n-1) sqrt Q]^{-1/(m-1)}
  double lo = 0.0, hi = 0.0;
};

TailEstimate tail_estimate(const EllipticSolution& sol, double lo, double hi);

// limit of the Dirichlet problems with v = alpha on the ball boundary
EllipticSolution solve_v_alpha(const ModelFunction& mf, double m, double alpha,
                               const BallSchedule& s);

struct SupersolutionW {
  RadialField W;
  RadialField defect;  // -Delta W - 1 per interior node
  double worst_defect = 0.0;
  bool feasible = false;
  double K = 0.0, r0 = 0.0;
};

// K/r0^{mu-1} [mu - (mu-1) r/r0] inside r0, K/r^{mu-1} outside
SupersolutionW supersolution_W(const ModelFunction& mf, double K, double r0);

// first feasible pair on a log grid of K and r0 (r0 >= 1)
SupersolutionW find_supersolution_W(const ModelFunction& mf);

// [C W + alpha^m]^{1/m} with C >= [C W(0) + alpha^m]^{1/m}/(m-1)
RadialField alpha_envelope(const SupersolutionW& W, double m, double alpha);

// columns r, v, vm, residual
void write_elliptic_csv(const std::string& path, const EllipticSolution& sol);
std::string tail_to_json(const TailEstimate& t);

}  // namespace pmelab
