#include "doctest.h"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "pmelab/errors.hpp"
#include "pmelab/parabolic.hpp"

using namespace pmelab;

namespace {

// u = t^{-3/5} (C - r^2 t^{-2/5}/20)_+ for n = 3, m = 2
double barenblatt(double r, double t, double C) {
  return std::pow(t, -0.6) * std::max(C - r * r * std::pow(t, -0.4) / 20.0, 0.0);
}

FlowConfig flat_barenblatt(std::size_t N) {
  FlowConfig c;
  c.mf = build_psi(CurvatureSpec::flat(3), RadialGrid::uniform(10.0, N));
  c.m = 2.0;
  c.u0 = RadialField(c.mf.grid, 0.0);
  for (std::size_t i = 0; i < c.mf.size(); ++i) c.u0[i] = barenblatt(c.mf.r(i), 1.0, 0.25);
  c.t_end = 400.0;
  c.snapshots = log_spaced_times(1.0, 400.0, 5);
  c.snapshots.insert(c.snapshots.begin(), 0.0);
  return c;
}

ModelFunction ramp_flow_grid() {
  return build_psi(CurvatureSpec::ramp_then_power(3, 2.0, 1.0, 1.0),
                   RadialGrid::uniform(8.0, 800));
}

}  // namespace

TEST_CASE("support radius") {
  auto g = RadialGrid::uniform(2.0, 20);
  CHECK(support_radius(RadialField(g, 0.0), 0.0) == 0.0);
  RadialField u(g, 0.0);
  for (std::size_t i = 0; i < g.size(); ++i)
    if (g.r[i] <= 1.0 + 1e-12) u[i] = 1.0;
  double R = support_radius(u, 1e-10);
  CHECK(R >= 1.0);
  CHECK(R <= 1.1);
  CHECK(support_radius(RadialField(g, 1.0), 0.5) == 2.0);
}

TEST_CASE("Euclidean flow follows the Barenblatt solution") {
  auto c = flat_barenblatt(1000);
  auto res = run_flow(c);
  // shifted time: the datum is the profile at t = 1
  std::vector<double> x, y;
  double err = 0.0;
  for (const auto& s : res.snapshots) {
    for (std::size_t i = 0; i < s.u.size(); ++i)
      err = std::max(err, std::abs(s.u[i] - barenblatt(s.u.r[i], s.t + 1.0, 0.25)));
    if (s.t >= 10.0) {
      x.push_back(s.t + 1.0);
      y.push_back(s.u.sup());
    }
  }
  CHECK(err < 2e-3 * c.u0.sup());
  CHECK(log_log_slope(x, y) == doctest::Approx(-0.6).epsilon(0.01));
  CHECK(res.diagnostics.max_mass_drift_rate < 1e-6);
  for (std::size_t k = 1; k < res.series.size(); ++k)
    CHECK(res.series[k].sup_norm <= res.series[k - 1].sup_norm);
  // front of the closed form: r^2 = 20 C t^{2/5}
  double R = res.series.back().support_radius;
  CHECK(R == doctest::Approx(std::sqrt(5.0 * std::pow(401.0, 0.4))).epsilon(0.02));

  auto vols = volume_lower_bound_check(res);
  CHECK(vols.back().second > 0.0);
}

TEST_CASE("Barenblatt error shrinks with the grid") {
  auto run_err = [](std::size_t N) {
    auto c = flat_barenblatt(N);
    c.t_end = 20.0;
    c.snapshots = {20.0};
    auto s = run_flow(c).snapshots.back();
    double e = 0.0;
    for (std::size_t i = 0; i < s.u.size(); ++i)
      e = std::max(e, std::abs(s.u[i] - barenblatt(s.u.r[i], 21.0, 0.25)));
    return e;
  };
  double coarse = run_err(250), fine = run_err(500);
  CHECK(fine < coarse);
}

TEST_CASE("zero datum stays zero") {
  FlowConfig c;
  c.mf = ramp_flow_grid();
  c.u0 = RadialField(c.mf.grid, 0.0);
  c.t_end = 10.0;
  c.snapshots = {0.0, 1.0, 10.0};
  auto res = run_flow(c);
  for (const auto& s : res.snapshots) CHECK(s.u.sup() == 0.0);
  CHECK(res.series.back().support_radius == 0.0);
  auto vols = volume_lower_bound_check(res);
  CHECK(vols.back().second == 0.0);
}

TEST_CASE("flow argument validation") {
  FlowConfig c;
  c.mf = ramp_flow_grid();
  c.u0 = RadialField(c.mf.grid, 0.0);
  c.u0[3] = -1.0;
  CHECK_THROWS_AS(run_flow(c), InvalidArgument);
  c.u0[3] = 0.0;
  c.u0[c.mf.size() - 1] = 1.0;
  CHECK_THROWS_AS(run_flow(c), InvalidArgument);
  c.u0 = RadialField(RadialGrid::uniform(8.0, 10), 0.0);
  CHECK_THROWS_AS(run_flow(c), GridMismatch);
}

TEST_CASE("separable datum stays separable") {
  auto mf = ramp_flow_grid();
  auto v = solve_dirichlet_ball(mf, mf.grid.L, 2.0);
  FlowConfig c;
  c.mf = mf;
  c.u0 = v.v;
  c.t_end = 1e4;
  c.snapshots = log_spaced_times(1.0, 1e4, 2);
  auto res = run_flow(c);
  // u = v/(t+1) up to the two discretizations
  double worst = 0.0;
  for (const auto& s : res.snapshots)
    for (std::size_t i = 0; i < mf.size(); ++i)
      worst = std::max(worst, std::abs((s.t + 1.0) * s.u[i] - v.v[i]));
  CHECK(worst < 2e-3 * v.v.sup());
  CHECK(universal_bound_check(res, v, 1.0) < 2e-3 * v.v.sup());
  CHECK(measured_shift(c.u0, v.v, 2.0) == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("long-time diagnostics on the superquadratic model") {
  auto mf = ramp_flow_grid();
  auto v = solve_dirichlet_ball(mf, mf.grid.L, 2.0);
  FlowConfig c;
  c.mf = mf;
  c.u0 = RadialField(mf.grid, 0.0);
  for (std::size_t i = 0; i < mf.size(); ++i) {
    double x = mf.r(i) / 1.5;
    if (x < 1.0) c.u0[i] = 0.8 * (1.0 - x * x);
  }
  c.t_end = 1e6;
  c.snapshots = log_spaced_times(1e-2, 1e6, 2);
  c.snapshots.insert(c.snapshots.begin(), 0.0);
  auto res = run_flow(c);

  CHECK(res.diagnostics.benilan_crandall_min_slack >= -1e-6 * 0.8);
  CHECK(res.diagnostics.rescaled_monotonicity_min_slack >= -1e-6 * 0.8);
  CHECK(res.diagnostics.max_mass_drift_rate < 1e-6);

  double t0 = measured_shift(c.u0, v.v, 2.0);
  CHECK(universal_bound_check(res, v, t0) <= 1e-6 * 0.8);
  CHECK(absolute_bound_excess(res, v, 10.0) <= 0.0);

  for (std::size_t k = 1; k < res.series.size(); ++k) {
    CHECK(res.series[k].sup_norm <= res.series[k - 1].sup_norm);
    CHECK(res.series[k].support_radius >= res.series[k - 1].support_radius);
  }

  auto cm = convergence_metric(res, v);
  REQUIRE(cm.size() >= 4);
  for (std::size_t k = cm.size() - 3; k < cm.size(); ++k) CHECK(cm[k].second < cm[k - 1].second);

  // t = 1 is a snapshot: U is u itself there
  auto U = rescaled_profile(res, 1.0);
  CHECK(U.tau == 0.0);
  const auto& s1 = *std::find_if(res.snapshots.begin(), res.snapshots.end(),
                                 [](const Snapshot& s) { return s.t == 1.0; });
  for (std::size_t i = 0; i < mf.size(); ++i) CHECK(U.U[i] == s1.u[i]);
  auto Ua = rescaled_profile(res, 100.0), Ub = rescaled_profile(res, 1e4);
  for (std::size_t i = 0; i < mf.size(); ++i) CHECK(Ub.U[i] >= Ua.U[i] - 1e-9);
  CHECK_THROWS_AS(rescaled_profile(res, 0.5), TimeOutsideRange);
  CHECK_THROWS_AS(rescaled_profile(res, 1e7), TimeOutsideRange);

  // corrupting the series by an extra factor t^{-1} breaks the inequality
  auto bad = res.snapshots;
  for (auto& s : bad)
    if (s.t > 0.0)
      for (auto& x : s.u.f) x /= s.t;
  CHECK(benilan_crandall_check(bad, 2.0) < -1e-3);

  auto other = ramp_flow_grid();
  auto vwrong = solve_dirichlet_ball(build_psi(CurvatureSpec::ramp_then_power(3, 2.0, 1.0, 1.0),
                                               RadialGrid::uniform(8.0, 400)),
                                     8.0, 2.0);
  CHECK_THROWS_AS(convergence_metric(res, vwrong), GridMismatch);
}

TEST_CASE("flow output files") {
  auto c = flat_barenblatt(100);
  c.t_end = 2.0;
  c.snapshots = {0.0, 1.0, 2.0};
  auto res = run_flow(c);
  auto dir = std::filesystem::temp_directory_path() / "pmelab_flow_test";
  write_snapshot_csvs(dir.string(), res);
  CHECK(std::filesystem::exists(dir / "snapshot_002.csv"));
  write_series_csv((dir / "series.csv").string(), res);
  std::ifstream in(dir / "series.csv");
  std::string head;
  std::getline(in, head);
  CHECK(head == "t,sup_norm,support_radius,mass");
  CHECK(diagnostics_to_json(res).find("benilan_crandall_min_slack") != std::string::npos);
  std::filesystem::remove_all(dir);
  CHECK_THROWS_AS(log_spaced_times(0.0, 1.0, 2), InvalidArgument);
}
