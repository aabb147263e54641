#include "doctest.h"

#include <cmath>

#include "pmelab/elliptic.hpp"
#include "pmelab/errors.hpp"
#include "pmelab/weighted.hpp"

using namespace pmelab;

namespace {

const ModelFunction& ramp_far() {
  static const ModelFunction mf =
      build_psi(CurvatureSpec::ramp_then_power(3, 2.0, 1.0, 1.0),
                RadialGrid::graded(64.0, 0.01, 1.0, 0.01));
  return mf;
}

const ChangeOfVariables& ramp_far_cv() {
  static const ChangeOfVariables cv = build_change_of_variables(ramp_far());
  return cv;
}

ModelFunction ramp_flow_grid(double h = 0.01) {
  return build_psi(CurvatureSpec::ramp_then_power(3, 2.0, 1.0, 1.0),
                   RadialGrid::uniform(8.0, std::size_t(8.0 / h + 0.5)));
}

RadialField bump(const RadialGrid& g, double height, double radius) {
  RadialField u(g, 0.0);
  for (std::size_t i = 0; i < g.size(); ++i) {
    double x = g.r[i] / radius;
    if (x < 1.0) u[i] = height * (1.0 - x * x);
  }
  return u;
}

}  // namespace

TEST_CASE("Euclidean weight is one") {
  auto mf = build_psi(CurvatureSpec::flat(3), RadialGrid::uniform(10.0, 1000));
  auto cv = build_change_of_variables(mf);
  for (std::size_t i = 1; i < cv.size(); ++i) {
    CHECK(std::abs(std::expm1(cv.log_rho[i])) < 1e-10);
    CHECK(cv.log_s[i] == doctest::Approx(std::log(mf.r(i))).epsilon(1e-10));
  }
  auto fit = fit_weight(cv, {1.01, std::log(10.0)});
  CHECK_FALSE(fit.in_regime);
  CHECK(fit.nu_fit == 0.0);
  CHECK(std::abs(fit.power_fit) < 1e-8);
  CHECK_FALSE(to_json(fit).empty());
}

TEST_CASE("change of variables on the superquadratic model") {
  const auto& cv = ramp_far_cv();
  const auto& mf = ramp_far();
  double off = 0.0;
  for (std::size_t i = 1; i < cv.size(); ++i) off = std::max(off, std::abs(cv.log_rho[i]));
  CHECK(off > 1.0);
  for (std::size_t i = 2; i < cv.size(); ++i) CHECK(cv.log_s[i] > cv.log_s[i - 1]);

  double rt = 0.0;
  for (std::size_t i = 1; i + 1 < mf.size(); ++i) {
    double r = 0.5 * (mf.r(i) + mf.r(i + 1));
    rt = std::max(rt, std::abs(cv.r_of_log_s(cv.log_s_at(r)) - r) / r);
  }
  CHECK(rt < 1e-10);

  auto two = build_psi(CurvatureSpec::ramp_then_power(2, 2.0, 1.0, 1.0),
                       RadialGrid::uniform(4.0, 100));
  CHECK_THROWS_AS(build_change_of_variables(two), DimensionTooLow);
}

TEST_CASE("transform keeps constants and order") {
  const auto& mf = ramp_far();
  const auto& cv = ramp_far_cv();
  auto c = transform_solution(cv, RadialField(mf.grid, 0.7));
  for (double x : c.f) CHECK(x == 0.7);
  RadialField a(mf.grid, 0.0), b(mf.grid, 0.0);
  for (std::size_t i = 0; i < mf.size(); ++i) {
    a[i] = 1.0 / (1.0 + mf.r(i));
    b[i] = a[i] + 0.01 * std::exp(-mf.r(i));
  }
  std::vector<double> nodes;
  for (double l = -3.0; l < 1e4; l = l < 1.0 ? l + 0.37 : l * 1.3) nodes.push_back(l);
  auto ta = transform_solution(cv, a, nodes), tb = transform_solution(cv, b, nodes);
  REQUIRE(ta.size() == nodes.size());
  for (std::size_t k = 0; k < nodes.size(); ++k) {
    CHECK(ta.f[k] <= tb.f[k]);
    if (k > 0) CHECK(ta.f[k] <= ta.f[k - 1]);
  }
  auto other = RadialField(RadialGrid::uniform(64.0, 10), 1.0);
  CHECK_THROWS_AS(transform_solution(cv, other), GridMismatch);
}

TEST_CASE("fitted weight exponent") {
  const auto& cv = ramp_far_cv();
  auto w = outer_window(cv);
  auto fit = fit_weight(cv, w);
  REQUIRE(fit.in_regime);
  CHECK(fit.nu_fit > 1.0);
  CHECK(fit.power_fit == doctest::Approx(-2.0).epsilon(0.05));
  // two disjoint windows agree
  auto a = fit_weight(cv, {w.lo / 100.0, w.lo / 10.0});
  CHECK(a.nu_fit == doctest::Approx(fit.nu_fit).epsilon(0.05));
  // power tail mu = 2: nu = 2 mu/(mu+1)
  CHECK(fit.nu_fit == doctest::Approx(4.0 / 3.0).epsilon(0.02));
  for (std::size_t i = 1; i < cv.size(); ++i) {
    double ls = cv.log_s[i];
    if (ls < w.lo || ls > w.hi) continue;
    double k = std::exp(cv.log_rho[i] + 2.0 * ls + fit.nu_fit * std::log(ls));
    CHECK(k >= fit.K1_fit * (1 - 1e-12));
    CHECK(k <= fit.K2_fit * (1 + 1e-12));
  }
  CHECK_THROWS_AS(fit_weight(cv, {0.5, 10.0}), InvalidArgument);
  CHECK_THROWS_AS(fit_weight(cv, {w.lo, 2.0 * w.hi}), WindowOutsideDomain);
  CHECK_THROWS_AS(fit_weight(cv, {w.lo, 1.2 * w.lo}), WindowTooNarrow);
}

TEST_CASE("s-Laplacian matches the manifold Laplacian") {
  auto mf = ramp_flow_grid();
  auto cv = build_change_of_variables(mf);
  std::vector<double> f(mf.size());
  for (std::size_t i = 0; i < mf.size(); ++i) f[i] = std::exp(-mf.r(i) * mf.r(i));
  auto lap = weighted_laplacian(cv, f);
  double worst = 0.0;
  for (std::size_t i = 1; i < mf.size(); ++i) {
    double r = mf.r(i);
    if (std::isnan(lap[i]) || r < 0.25 || r > 4.0) continue;
    double exact = (4 * r * r - 2) * f[i] - 4.0 * mf.p[i] * r * f[i];
    worst = std::max(worst, std::abs(lap[i] * std::exp(-cv.log_rho[i]) - exact));
  }
  CHECK(worst < 1e-3);
  CHECK(std::isnan(lap.back()));
}

TEST_CASE("transformed flow solves the weighted equation") {
  double prev = 0.0;
  for (double h : {0.01, 0.005}) {
    auto mf = ramp_flow_grid(h);
    auto cv = build_change_of_variables(mf);
    FlowConfig c;
    c.mf = mf;
    c.u0 = bump(mf.grid, 0.8, 1.5);
    c.t_end = 1.0;
    c.snapshots = {1.0};
    auto a = run_flow(c);
    FlowConfig d = c;
    d.u0 = a.snapshots.back().u;
    d.t_end = 1e-4;
    d.snapshots = {1e-4};
    d.stepping.dt_init = 1e-4;
    auto b = run_flow(d);
    auto res = weighted_pme_residual(cv, d.u0, b.snapshots.back().u, 1e-4, 2.0);
    CHECK(res.worst < 1e-4);
    if (prev > 0.0) CHECK(res.worst < 0.5 * prev);
    prev = res.worst;
    CHECK_THROWS_AS(weighted_pme_residual(cv, d.u0, d.u0, 0.0, 2.0), InvalidArgument);
  }
}

TEST_CASE("weighted minimal tail") {
  WeightFit fit;
  fit.nu_fit = 2.0;
  fit.K1_fit = fit.K2_fit = 1.0;
  fit.in_regime = true;
  WeightedField V;
  for (double l = 10.0; l < 1000.0; l *= 1.1) {
    V.log_s.push_back(l);
    V.f.push_back(0.5 / l);
  }
  auto t = weighted_minimal_tail(fit, V, 2.0, 3, {10.0, 1000.0});
  CHECK(t.target_low == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(t.target_high == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(t.liminf_const == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(t.limsup_const == doctest::Approx(0.5).epsilon(1e-14));
  CHECK_THROWS_AS(weighted_minimal_tail(fit, V, 2.0, 3, {10.0, 11.0}), WindowTooNarrow);
  CHECK_THROWS_AS(weighted_minimal_tail(fit, V, 2.0, 2, {10.0, 1000.0}), DimensionTooLow);

  auto flat = build_change_of_variables(
      build_psi(CurvatureSpec::flat(3), RadialGrid::uniform(10.0, 1000)));
  auto ffit = fit_weight(flat, {1.01, std::log(10.0)});
  CHECK_THROWS_AS(weighted_minimal_tail(ffit, V, 2.0, 3, {1.01, 2.3}), InvalidArgument);
}

TEST_CASE("transformed minimal solution meets the tail targets") {
  const auto& mf = ramp_far();
  const auto& cv = ramp_far_cv();
  auto w = outer_window(cv);
  auto fit = fit_weight(cv, w);
  auto pic = picard_tail_iteration(mf, 2.0, RadialField(mf.grid, 0.5));
  auto V = transform_solution(cv, pic.v);
  auto t = weighted_minimal_tail(fit, V, 2.0, 3, w);
  CHECK(t.liminf_const >= 0.8 * t.target_low);
  CHECK(t.limsup_const <= 1.2 * t.target_high);
  CHECK(to_json(t).find("target_low") != std::string::npos);
}

TEST_CASE("weighted barriers") {
  WeightedBarrierParams p;
  p.C1 = 2.0;
  p.gamma1 = 0.5;
  p.t0 = 3.0;
  p.R0 = 10.0;
  p.nu = 2.0;
  // [1/l - 0.5/log(t+3)]_+ 2/(t+3)
  CHECK(weighted_barrier(2.0, 0.5, p, 1.5, 1.0) ==
        doctest::Approx(0.5 * (1.0 / 1.5 - 0.5 / std::log(4.0))).epsilon(1e-14));
  CHECK(weighted_barrier(2.0, 0.5, p, 4.0, 1.0) == 0.0);
  CHECK(weighted_barrier(2.0, 0.5, p, 10.0, 0.0) == 0.0);

  auto mf = ramp_flow_grid();
  auto cv = build_change_of_variables(mf);
  auto fit = fit_weight(cv, outer_window(cv));
  auto v = solve_dirichlet_ball(mf, mf.grid.L, 2.0);
  FlowConfig c;
  c.mf = mf;
  c.u0 = bump(mf.grid, 0.8, 1.5);
  c.t_end = 1e6;
  c.snapshots = log_spaced_times(1e-2, 1e6, 2);
  c.snapshots.insert(c.snapshots.begin(), 0.0);
  auto res = run_flow(c);

  WeightedSearchInputs in;
  in.fit = fit;
  in.v = v.v;
  in.u0 = c.u0;
  in.tau = measured_shift(c.u0, v.v, 2.0);
  in.T = 1.0;
  in.U_T = rescaled_profile(res, 1.0).U;
  auto q = find_weighted_barrier_params(cv, in);
  CHECK(q.C1 > 0.0);
  CHECK(q.C2 > q.C1);
  auto rep = check_weighted_barriers(cv, res.snapshots, q);
  CHECK(rep.satisfied);
  CHECK_FALSE(to_json(q).empty());

  // the lower barrier only enters s >= R0 at astronomically late times
  auto late = check_weighted_residual(cv, q, {1e100, 1e150, 1e200});
  CHECK(late.satisfied);
  bool lower_seen = false;
  for (const auto& w : late.witnesses) lower_seen = lower_seen || w.what == "lower residual";
  CHECK(lower_seen);

  auto cut = q;
  cut.C2 /= 100.0;
  CHECK_FALSE(check_weighted_residual(cv, cut, c.snapshots).satisfied);

  // zero outside the positivity set
  CHECK(weighted_barrier(q.C2, q.gamma2, q, 1e6, 0.0) == 0.0);

  auto low = fit;
  low.nu_fit = 0.9;
  in.fit = low;
  CHECK_THROWS_AS(find_weighted_barrier_params(cv, in), InvalidArgument);
  auto bad = q;
  bad.n = 2;
  CHECK_THROWS_AS(check_weighted_residual(cv, bad, {1.0}), DimensionTooLow);
}
