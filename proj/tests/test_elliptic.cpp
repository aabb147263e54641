#include "doctest.h"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <string>

#include "pmelab/elliptic.hpp"
#include "pmelab/errors.hpp"

using namespace pmelab;

namespace {

// psi = sinh r on [0, 3]: the floor D = 1 dominates Q r^4
ModelFunction hyperbolic(std::size_t N) {
  return build_psi(CurvatureSpec::floor_max_power(3, 2.0, 1e-8, 1.0),
                   RadialGrid::uniform(3.0, N));
}

const ModelFunction& ramp_far() {
  static const ModelFunction mf =
      build_psi(CurvatureSpec::ramp_then_power(3, 2.0, 1.0, 1.0),
                RadialGrid::graded(4096.0, 0.005, 1.0, 0.01));
  return mf;
}

BallSchedule doubling() {
  BallSchedule s;
  s.radii = {256, 512, 1024, 2048, 4096};
  s.tol = 1e-4;
  return s;
}

}  // namespace

TEST_CASE("Dirichlet ball on the hyperbolic model against a shooting reference") {
  // reference: shooting on W(0) with an rtol 1e-13 integrator, root on W(3) = 0
  struct Ref { double r, v; };
  const Ref ref[] = {{0.0, 0.7258952022220883},
                     {1.0, 0.645875709702892},
                     {2.0, 0.4329736127604488},
                     {2.9, 0.11426111825917047}};
  auto coarse = solve_dirichlet_ball(hyperbolic(300), 3.0, 2.0);
  auto fine = solve_dirichlet_ball(hyperbolic(600), 3.0, 2.0);
  for (const auto& x : ref) {
    double ec = std::abs(coarse.v.at(x.r) - x.v);
    double ef = std::abs(fine.v.at(x.r) - x.v);
    CHECK(ef < 2e-5);
    if (x.r < 2.5) CHECK(ec / ef > 3.0);
  }
  CHECK(fine.max_residual < 1e-10);
  CHECK(fine.method == EllipticMethod::DirichletBalls);
}

TEST_CASE("ball solutions are positive, radially decreasing and nested") {
  auto mf = build_psi(CurvatureSpec::ramp_then_power(3, 2.0, 1.0, 1.0),
                      RadialGrid::graded(64.0, 0.005, 1.0, 0.01));
  auto a = solve_dirichlet_ball(mf, 16.0, 2.0);
  auto b = solve_dirichlet_ball(mf, 32.0, 2.0);
  auto c = solve_dirichlet_ball(mf, 64.0, 2.0);
  for (std::size_t i = 0; i + 1 < mf.size(); ++i) {
    if (mf.r(i) < a.radius) CHECK(a.v[i] > 0.0);
    if (mf.r(i) < c.radius) CHECK(c.v[i + 1] <= c.v[i]);
    CHECK(a.v[i] <= b.v[i]);
    CHECK(b.v[i] <= c.v[i]);
  }
  CHECK(c.v[mf.size() - 1] == 0.0);
}

TEST_CASE("ball argument validation") {
  auto mf = hyperbolic(100);
  CHECK_THROWS_AS(solve_dirichlet_ball(mf, 4.0, 2.0), InvalidArgument);
  CHECK_THROWS_AS(solve_dirichlet_ball(mf, 2.0, 1.0), InvalidArgument);
  CHECK_THROWS_AS(solve_dirichlet_ball(mf, 2.0, 2.0, -1.0), InvalidArgument);
}

TEST_CASE("minimal solution increments are nonnegative and shrink") {
  const auto& mf = ramp_far();
  auto sol = minimal_solution(mf, 2.0, doubling());
  REQUIRE(sol.increments.size() >= 2);
  for (std::size_t i = 1; i < sol.increments.size(); ++i)
    CHECK(sol.increments[i] < sol.increments[i - 1]);
  CHECK(sol.increments.back() < 1e-4);
  auto k1 = solve_dirichlet_ball(mf, 1024.0, 2.0);
  for (std::size_t i = 0; i < mf.size(); ++i) CHECK(k1.v[i] <= sol.v[i]);
}

TEST_CASE("exhausted schedule carries the last two iterates") {
  const auto& mf = ramp_far();
  BallSchedule s;
  s.radii = {64, 128};
  s.tol = 1e-8;
  try {
    minimal_solution(mf, 2.0, s);
    FAIL("expected NotConverged");
  } catch (const NotConverged& e) {
    REQUIRE(e.last.size() == mf.size());
    REQUIRE(e.previous.size() == mf.size());
    CHECK(e.last[0] > e.previous[0]);
  }
}

TEST_CASE("integral route agrees with the ball route and has the predicted tail") {
  const auto& mf = ramp_far();
  auto balls = minimal_solution(mf, 2.0, doubling());
  auto pic = picard_tail_iteration(mf, 2.0, RadialField(mf.grid, 0.5));
  CHECK(pic.method == EllipticMethod::PicardIntegral);
  CHECK(pic.max_residual < 1e-12);
  double d = 0.0;
  for (std::size_t i = 0; i < mf.size() && mf.r(i) <= 1024.0; ++i)
    d = std::max(d, std::abs(balls.v[i] - pic.v[i]));
  CHECK(d < 1e-4);
  // the balls approach from below
  for (std::size_t i = 0; i < mf.size(); ++i) CHECK(balls.v[i] <= pic.v[i]);
  for (std::size_t i = 0; i + 1 < mf.size(); ++i) CHECK(pic.v[i + 1] <= pic.v[i]);

  // C = (C/4)^{1/2} has fixed point 1/4
  auto t = tail_estimate(pic, 16.0, 64.0);
  CHECK(t.target == doctest::Approx(0.25).epsilon(1e-14));
  CHECK(t.constant_fit == doctest::Approx(0.25).epsilon(1e-3));
  CHECK(t.exponent_fit == doctest::Approx(-1.0).epsilon(1e-3));
  CHECK_THROWS_AS(tail_estimate(pic, 16.0, 16.1), WindowTooNarrow);
}

TEST_CASE("integral route refuses the Euclidean model") {
  auto mf = build_psi(CurvatureSpec::flat(3), RadialGrid::uniform(10.0, 100));
  CHECK_THROWS_AS(picard_tail_iteration(mf, 2.0, RadialField(mf.grid, 1.0)), InvalidArgument);
}

TEST_CASE("v_alpha family") {
  const auto& mf = ramp_far();
  auto v = minimal_solution(mf, 2.0, doubling());
  auto W = find_supersolution_W(mf);
  REQUIRE(W.feasible);
  std::vector<EllipticSolution> fam;
  for (double alpha : {0.01, 0.1, 1.0}) fam.push_back(solve_v_alpha(mf, 2.0, alpha, doubling()));
  const double alphas[] = {0.01, 0.1, 1.0};
  for (int k = 0; k < 3; ++k) {
    auto V = alpha_envelope(W, 2.0, alphas[k]);
    for (std::size_t i = 0; i < mf.size(); ++i) {
      CHECK(fam[k].v[i] >= alphas[k] * (1 - 1e-12));
      CHECK(fam[k].v[i] >= v.v[i]);
      CHECK(fam[k].v[i] <= V[i]);
      if (k > 0) CHECK(fam[k].v[i] >= fam[k - 1].v[i]);
    }
    double far = fam[k].v.at(0.9 * mf.grid.L);
    CHECK(std::abs(far - alphas[k]) <= 0.02 * alphas[k]);
  }
  // the family decreases toward v on the core
  double d1 = std::abs(fam[1].v[0] - v.v[0]), d0 = std::abs(fam[0].v[0] - v.v[0]);
  CHECK(d0 < d1);
}

TEST_CASE("supersolution W") {
  const auto& mf = ramp_far();
  auto W = supersolution_W(mf, 10.0, 4.0);
  // C^1 at r0
  const double mu = 2.0, K = 10.0, r0 = 4.0;
  double left = K / std::pow(r0, mu - 1) * (mu - (mu - 1));
  double right = K / std::pow(r0, mu - 1);
  CHECK(left == doctest::Approx(right).epsilon(1e-15));
  double sl = -K * (mu - 1) / std::pow(r0, mu);
  double sr = -K * (mu - 1) * std::pow(r0, -mu);
  CHECK(sl == doctest::Approx(sr).epsilon(1e-15));

  auto found = find_supersolution_W(mf);
  CHECK(found.feasible);
  CHECK(found.worst_defect >= 0.0);
  auto bigger = supersolution_W(mf, 10 * found.K, found.r0);
  CHECK(bigger.feasible);

  auto flat = build_psi(CurvatureSpec::flat(3), RadialGrid::uniform(100.0, 1000));
  flat.spec.mu = 2.0;
  auto fw = supersolution_W(flat, 1e3, 2.0);
  CHECK_FALSE(fw.feasible);
  CHECK(fw.defect[flat.size() - 1] == doctest::Approx(-1.0).epsilon(1e-2));
}

TEST_CASE("elliptic csv and tail json") {
  auto sol = solve_dirichlet_ball(hyperbolic(60), 3.0, 2.0);
  write_elliptic_csv("ell_a.csv", sol);
  std::ifstream in("ell_a.csv");
  std::string head;
  std::getline(in, head);
  CHECK(head == "r,v,vm,residual");
  std::remove("ell_a.csv");
  TailEstimate t{-1.0, 0.25, 0.25, 16.0, 64.0};
  auto js = tail_to_json(t);
  CHECK(js.find("\"exponent_fit\"") != std::string::npos);
  CHECK(js.find("\"window\"") != std::string::npos);
}
