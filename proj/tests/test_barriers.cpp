#include "doctest.h"

#include <cmath>

#include "pmelab/barriers.hpp"
#include "pmelab/elliptic.hpp"
#include "pmelab/errors.hpp"

using namespace pmelab;

namespace {

const ModelFunction& ramp() {
  static const ModelFunction mf =
      build_psi(CurvatureSpec::ramp_then_power(3, 2.0, 1.0, 1.0),
                RadialGrid::graded(4096.0, 0.005, 1.0, 0.01));
  return mf;
}

const ModelFunction& ramp_short() {
  static const ModelFunction mf =
      build_psi(CurvatureSpec::ramp_then_power(3, 2.0, 1.0, 1.0),
                RadialGrid::graded(64.0, 0.01, 1.0, 0.01));
  return mf;
}

RadialField bump(double height, double radius) {
  auto g = RadialGrid::uniform(3.0, 300);
  RadialField u(g, 0.0);
  for (std::size_t i = 0; i < g.size(); ++i) {
    double x = g.r[i] / radius;
    if (x < 1.0) u[i] = height * (1.0 - x * x);
  }
  return u;
}

UpperInputs upper_inputs(double height) {
  UpperInputs in;
  in.beta = drift_beta(ramp_short());
  in.u0 = bump(height, 2.5);
  in.M = height;
  in.tau = 1.0;
  return in;
}

Region log_times(double r_hi) {
  Region reg;
  reg.r_hi = r_hi;
  reg.times.push_back(0.0);
  for (double t = 1e-2; t <= 1e8; t *= 3.0) reg.times.push_back(t);
  return reg;
}

}  // namespace

TEST_CASE("elliptic barrier closed forms") {
  CHECK(sub_constant(2.0, 2.0, 3, 1.0, 0.0) == doctest::Approx(0.25).epsilon(1e-15));
  auto g = RadialGrid::uniform(10.0, 10);
  EllipticBarrierParams sup;
  sup.C = 3.0;
  sup.r0 = 2.0;
  sup.m = 3.0;
  sup.mu = 2.5;
  auto v = eval_elliptic_barrier(sup, g);
  CHECK(v[0] == doctest::Approx(3.0 / std::pow(2.0, 1.5 / 2.0)).epsilon(1e-15));

  // (r^2 + r0^2)^{1/2} >= 1/delta: r^2 >= 25 - 4
  auto sub = make_sub(2.0, 2.0, 3, 1.0, 0.0, 0.2, 2.0);
  auto w = eval_elliptic_barrier(sub, g);
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (g.r[i] * g.r[i] >= 21.0) CHECK(w[i] == 0.0);
    else CHECK(w[i] > 0.0);
  }
  CHECK_THROWS_AS(make_sub(2.0, 2.0, 3, 1.0, -0.1, 0.0, 1.0), InvalidArgument);
}

TEST_CASE("elliptic supersolution feasibility") {
  const auto& mf = ramp_short();
  auto p = find_elliptic_super(mf, 2.0);
  auto rep = check_elliptic_feasibility(p, mf);
  CHECK(rep.satisfied);
  CHECK(rep.worst_margin >= 0.0);

  auto big = p;
  big.C *= 10.0;
  CHECK(check_elliptic_feasibility(big, mf).satisfied);

  // lower C until the chain breaks; the binding point is r = 1
  auto low = p;
  FeasibilityReport bad;
  for (int k = 0; k < 100; ++k) {
    low.C *= 0.99;
    bad = check_elliptic_feasibility(low, mf);
    if (!bad.satisfied) break;
  }
  REQUIRE_FALSE(bad.satisfied);
  CHECK(bad.worst_margin < 0.0);
  CHECK(bad.witnesses.front().r == doctest::Approx(1.0).epsilon(0.02));
}

TEST_CASE("elliptic subsolution feasibility") {
  const auto& mf = ramp_short();
  auto p = find_elliptic_sub(mf, 2.0, 0.1, 0.0);
  CHECK(check_elliptic_feasibility(p, mf).satisfied);
  auto dc = sub_drift_constants(mf, 0.1);
  CHECK(dc.R_low > 0.0);
  CHECK(dc.alpha >= 2.0);

  // r0 below the printed far-field bound
  const double c = 2.0 * std::sqrt(1.1);
  const double r0_min = std::sqrt(1.0 / (c * std::pow(dc.R_low, 1.0)));
  auto q = make_sub(2.0, 2.0, 3, 1.0, 0.1, 0.0, 0.9 * r0_min);
  auto rep = check_elliptic_feasibility(q, mf);
  CHECK_FALSE(rep.satisfied);
}

TEST_CASE("elliptic sandwich around the minimal solution") {
  const auto& mf = ramp();
  BallSchedule s;
  s.radii = {256, 512, 1024, 2048, 4096};
  s.tol = 1e-4;
  auto v = minimal_solution(mf, 2.0, s);
  auto hi = eval_elliptic_barrier(find_elliptic_super(mf, 2.0), mf.grid);
  for (double eps : {0.5, 0.1}) {
    auto r0 = find_elliptic_sub(mf, 2.0, eps, 0.0).r0;
    double delta = 1.0001 / std::hypot(mf.grid.L / 2.0, r0);
    auto sub = find_elliptic_sub(mf, 2.0, eps, delta);
    auto lo = eval_elliptic_barrier(sub, mf.grid);
    int violations = 0;
    for (std::size_t i = 0; i < mf.size(); ++i) {
      if (lo[i] > v.v[i]) ++violations;
      if (v.v[i] > hi[i]) ++violations;
      if (mf.r(i) > mf.grid.L / 2.0) CHECK(lo[i] == 0.0);
    }
    CHECK(violations == 0);
  }
}

TEST_CASE("parabolic barrier evaluation") {
  BarrierParams p;
  p.C = 2.0;
  p.gamma = 0.3;
  p.r0 = 1.5;
  p.t0 = 3.0;
  p.m = 2.0;
  p.mu = 2.0;
  for (double t : {0.0, 1.0, 1e3, 1e8}) {
    double f = barrier_front(p, t);
    double fb = std::pow(p.gamma, -1.0) * std::cbrt(std::log(t + p.t0)) - p.r0;
    CHECK(f == doctest::Approx(fb).epsilon(1e-15));
    CHECK(eval_parabolic_barrier(p, f * (1 + 1e-15) + 1e-15, t) == 0.0);
    CHECK(eval_parabolic_barrier(p, f * (1 - 1e-12), t) > 0.0);
    CHECK(eval_parabolic_barrier(p, 1e12, t) == 0.0);
  }
  // closed form at one point
  double B = 1.0 / 2.5 - 0.3 / std::cbrt(std::log(4.0));
  CHECK(eval_parabolic_barrier(p, 1.0, 1.0) == doctest::Approx(2.0 / 4.0 * B).epsilon(1e-14));
  CHECK(eval_parabolic_barrier(p, 1.0, 1.0) == eval_parabolic_barrier(p, 1.0, 1.0));

  // front grows like (log t)^{1/(1+mu)}
  double a = std::log(barrier_front(p, 1e8) + p.r0) - std::log(barrier_front(p, 1e4) + p.r0);
  double b = std::log(std::log(1e8 + p.t0)) - std::log(std::log(1e4 + p.t0));
  CHECK(a / b == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("upper barrier search") {
  auto in = upper_inputs(1.0);
  auto p = find_upper_params(in);
  CHECK(p.t0 > 1.0);
  CHECK(p.t0 >= in.tau);
  for (std::size_t i = 0; i < in.u0.size(); ++i)
    if (in.u0[i] > 0.0) CHECK(eval_parabolic_barrier(p, in.u0.r[i], 0.0) >= in.u0[i]);

  auto rep = verify_differential_inequality(p, ramp_short(), log_times(64.0));
  CHECK(rep.satisfied);

  auto in2 = upper_inputs(2.0);
  auto p2 = find_upper_params(in2);
  CHECK(p2.C > p.C);
  CHECK(p2.gamma <= p.gamma);

  // gamma^{(mu+1)/(mu-1)} ten times the admissible bound
  auto wrong = p;
  wrong.gamma = std::pow(10.0 * p.k2 / std::pow(p.C, p.m - 1.0), (p.mu - 1.0) / (p.mu + 1.0));
  auto bad = verify_differential_inequality(wrong, ramp_short(), log_times(64.0));
  CHECK_FALSE(bad.satisfied);
  REQUIRE_FALSE(bad.witnesses.empty());
  CHECK(bad.witnesses.front().r < barrier_front(wrong, bad.witnesses.front().t));

  auto none = in;
  none.beta = 0.0;
  CHECK_THROWS_AS(find_upper_params(none), InvalidArgument);
}

TEST_CASE("lower barrier search") {
  LowerInputs in;
  in.beta_hat = drift_beta_hat(ramp_short());
  in.I = 0.2;
  in.T = 1.0;
  auto p = find_lower_params(in);
  CHECK(p.r0 >= 1.0);
  CHECK(std::pow(p.C, p.m - 1.0) * p.m * in.beta_hat * (p.mu - 1.0) <= 0.5);
  CHECK(p.C <= in.I * std::pow(p.r0, (p.mu - 1.0) / (p.m - 1.0)));
  // nothing outside B_1 before T
  for (double t = 0.0; t < in.T; t += 0.01) CHECK(barrier_front(p, t) < 1.0);
  auto rep = verify_differential_inequality(p, ramp_short(), log_times(64.0));
  CHECK(rep.satisfied);
}

TEST_CASE("report json") {
  FeasibilityReport rep;
  rep.satisfied = true;
  rep.worst_margin = 0.5;
  rep.witnesses.push_back({1.0, 2.0, 0.5, "residual"});
  auto js = to_json(rep);
  CHECK(js.find("\"worst_margin\": 0.5") != std::string::npos);
  CHECK(js.find("\"witnesses\"") != std::string::npos);
  BarrierParams p;
  CHECK(to_json(p).find("\"gamma\"") != std::string::npos);
}
