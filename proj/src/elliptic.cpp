#include "pmelab/elliptic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>

#include <Eigen/Sparse>
#include <Eigen/SparseLU>
#include "json.hpp"

#include "pmelab/errors.hpp"
#include "pmelab/quadrature.hpp"

namespace pmelab {

namespace {

constexpr double kReg = 1e-12;  // (w + kReg)^{1/m} keeps dv/dw finite at w = 0

// int of J over one cell (trapezoid)
double cell_integral(double h, double J0, double J1) { return 0.5 * h * (J0 + J1); }

struct Setup {
  const ModelFunction& mf;
  FluxWeights fw;
  double m;
  int n;

  Setup(const ModelFunction& mf_, double m_) : mf(mf_), fw(flux_weights(mf_)), m(m_), n(mf_.spec.n) {}

  double h(std::size_t j) const { return mf.grid.r[j + 1] - mf.grid.r[j]; }

  std::vector<double> forward_flux(const std::vector<double>& v, std::size_t K) const {
    std::vector<double> J(K + 1, 0.0);
    for (std::size_t j = 0; j < K; ++j)
      J[j + 1] = fw.E[j] * J[j] + fw.a[j] * v[j] + fw.b[j] * v[j + 1];
    return J;
  }

  // W_j = W_{j+1} + c int J, from W_K = top
  std::vector<double> backward(const std::vector<double>& J,
                               std::size_t K, double top, double c) const {
    std::vector<double> W(K + 1, 0.0);
    W[K] = top;
    for (std::size_t j = K; j-- > 0;)
      W[j] = W[j + 1] + c * cell_integral(h(j), J[j], J[j + 1]);
    return W;
  }

  // defect of W_j - W_{j+1} = c int J, scaled by W(0)
  RadialField defect(const std::vector<double>& W, std::size_t K) const {
    RadialField res(mf.grid, 0.0);
    std::vector<double> v(K + 1);
    for (std::size_t i = 0; i <= K; ++i) v[i] = std::pow(std::max(W[i], 0.0), 1.0 / m);
    std::vector<double> Jv = forward_flux(v, K);
    double scale = std::max(std::abs(W[0]), 1e-300);
    const double c = 1.0 / (m - 1);
    for (std::size_t j = 0; j < K; ++j) {
      double rhs = c * cell_integral(h(j), Jv[j], Jv[j + 1]);
      res[j] = std::abs(W[j] - W[j + 1] - rhs) / scale;
    }
    return res;
  }
};

double vreg(double w, double m) { return std::pow(std::max(w, 0.0) + kReg, 1.0 / m); }
double dvreg(double w, double m) { return std::pow(std::max(w, 0.0) + kReg, 1.0 / m - 1.0) / m; }

EllipticSolution newton_ball(const Setup& S, std::size_t K, double boundary) {
  const double m = S.m;
  const double c = 1.0 / (m - 1);
  const double bm = std::pow(boundary, m);

  // torsion function: -Delta T = 1, T(r_K) = 0
  std::vector<double> ones(K + 1, 1.0);
  std::vector<double> T = S.backward(S.forward_flux(ones, K), K, 0.0, 1.0);
  // lambda with lambda (m-1) = (b^m + lambda T(0))^{1/m}
  double lam = 1.0 + bm;
  for (int it = 0; it < 200; ++it) lam = std::pow(bm + lam * T[0], 1.0 / m) * c + 1e-300;

  const std::size_t U = 2 * (K + 1);
  for (int attempt = 0; attempt < 4; ++attempt) {
    double seed = 1.25 * lam * std::pow(4.0, attempt);
    std::vector<double> W(K + 1), J;
    for (std::size_t i = 0; i <= K; ++i) W[i] = bm + seed * T[i];
    {
      std::vector<double> v(K + 1);
      for (std::size_t i = 0; i <= K; ++i) v[i] = vreg(W[i], m);
      J = S.forward_flux(v, K);
    }

    Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
    bool analysed = false;
    bool ok = false;
    int it = 0;
    for (; it < 80; ++it) {
      std::vector<double> v(K + 1), dv(K + 1);
      for (std::size_t i = 0; i <= K; ++i) {
        v[i] = vreg(W[i], m);
        dv[i] = dvreg(W[i], m);
      }
      std::vector<Eigen::Triplet<double>> trip;
      trip.reserve(10 * (K + 1));
      Eigen::VectorXd F(U);
      auto wi = [&](std::size_t i) { return int(i); };
      auto ji = [&](std::size_t i) { return int(K + 1 + i); };
      F[0] = J[0];
      trip.emplace_back(0, ji(0), 1.0);
      for (std::size_t j = 0; j < K; ++j) {
        int row = int(1 + j);
        F[row] = J[j + 1] - S.fw.E[j] * J[j] - S.fw.a[j] * v[j] - S.fw.b[j] * v[j + 1];
        trip.emplace_back(row, ji(j + 1), 1.0);
        trip.emplace_back(row, ji(j), -S.fw.E[j]);
        trip.emplace_back(row, wi(j), -S.fw.a[j] * dv[j]);
        trip.emplace_back(row, wi(j + 1), -S.fw.b[j] * dv[j + 1]);
      }
      for (std::size_t j = 0; j < K; ++j) {
        int row = int(K + 1 + j);
        double h = S.h(j);
        F[row] = W[j] - W[j + 1] - c * cell_integral(h, J[j], J[j + 1]);
        trip.emplace_back(row, wi(j), 1.0);
        trip.emplace_back(row, wi(j + 1), -1.0);
        trip.emplace_back(row, ji(j), -0.5 * c * h);
        trip.emplace_back(row, ji(j + 1), -0.5 * c * h);
      }
      F[int(U - 1)] = W[K] - bm;
      trip.emplace_back(int(U - 1), wi(K), 1.0);

      Eigen::SparseMatrix<double> A(static_cast<Eigen::Index>(U), static_cast<Eigen::Index>(U));
      A.setFromTriplets(trip.begin(), trip.end());
      A.makeCompressed();
      if (!analysed) {
        lu.analyzePattern(A);
        analysed = true;
      }
      lu.factorize(A);
      if (lu.info() != Eigen::Success) break;
      Eigen::VectorXd d = lu.solve(-F);
      if (!d.allFinite()) break;
      double wmax = 0.0, step = 0.0;
      for (std::size_t i = 0; i <= K; ++i) {
        W[i] += d[wi(i)];
        J[i] += d[ji(i)];
        wmax = std::max(wmax, std::abs(W[i]));
        step = std::max(step, std::abs(d[wi(i)]));
      }
      if (!std::isfinite(wmax)) break;
      if (step <= 1e-13 * wmax) {
        ok = true;
        ++it;
        break;
      }
    }
    if (!ok) continue;
    if (!(W[0] > 0)) {
      if (attempt == 3) throw NonPositiveIterate("ball solve collapsed to a nonpositive iterate");
      continue;
    }
    EllipticSolution sol;
    sol.mf = S.mf;
    sol.m = m;
    sol.method = EllipticMethod::DirichletBalls;
    sol.radius = S.mf.grid.r[K];
    sol.iterations = it;
    sol.v = RadialField(S.mf.grid, 0.0);
    for (std::size_t i = 0; i <= K; ++i) sol.v[i] = std::pow(std::max(W[i], 0.0), 1.0 / m);
    sol.v[K] = boundary;
    sol.residual = S.defect(W, K);
    sol.max_residual = sol.residual.sup();
    return sol;
  }
  throw NewtonDiverged("Newton failed on the Dirichlet ball of radius " +
                       std::to_string(S.mf.grid.r[K]));
}

std::size_t ball_index(const ModelFunction& mf, double k) {
  if (!(k > 0) || k > mf.grid.L * (1 + 1e-12))
    throw InvalidArgument("ball radius must lie in (0, L]");
  std::size_t K = mf.grid.nearest(k);
  if (K < 2) throw InvalidArgument("ball radius below the grid resolution");
  return K;
}

void check_m(double m) {
  if (!(m > 1)) throw InvalidArgument("m must exceed 1");
}

double sup_diff(const RadialField& a, const RadialField& b, double core) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a.r[i] > core) break;
    d = std::max(d, std::abs(a[i] - b[i]));
  }
  return d;
}

EllipticSolution ball_limit(const ModelFunction& mf, double m, const BallSchedule& s,
                            double boundary, const char* who) {
  check_m(m);
  if (s.radii.empty()) throw InvalidArgument("empty ball schedule");
  for (std::size_t i = 1; i < s.radii.size(); ++i)
    if (!(s.radii[i] > s.radii[i - 1])) throw InvalidArgument("ball schedule must increase");
  const double core = s.core > 0 ? s.core : mf.grid.L / 4;
  Setup S(mf, m);
  std::vector<double> incs;
  EllipticSolution prev;
  bool have = false;
  for (double k : s.radii) {
    EllipticSolution cur = newton_ball(S, ball_index(mf, k), boundary);
    if (have) {
      incs.push_back(sup_diff(cur.v, prev.v, core));
      if (incs.back() < s.tol) {
        cur.increments = incs;
        return cur;
      }
    }
    prev = std::move(cur);
    have = true;
  }
  std::vector<double> last = prev.v.f;
  std::vector<double> before;
  if (s.radii.size() >= 2)
    before = newton_ball(S, ball_index(mf, s.radii[s.radii.size() - 2]), boundary).v.f;
  throw NotConverged(std::string(who) + ": ball schedule exhausted", before, last);
}

}  // namespace

std::string to_string(EllipticMethod m) {
  switch (m) {
    case EllipticMethod::DirichletBalls: return "DirichletBalls";
    case EllipticMethod::PicardIntegral: return "PicardIntegral";
    case EllipticMethod::ParabolicLimit: return "ParabolicLimit";
  }
  return "?";
}

FluxWeights flux_weights(const ModelFunction& mf) {
  const std::size_t N = mf.size();
  const double k = mf.spec.n - 1;
  FluxWeights fw;
  fw.E.assign(N - 1, 0.0);
  fw.a.assign(N - 1, 0.0);
  fw.b.assign(N - 1, 0.0);
  for (std::size_t j = 0; j + 1 < N; ++j) {
    ExpMoments mo = exp_moments(mf, j, k, mf.r(j), mf.r(j + 1));
    // moments are relative to phi at r_{j+1}
    double shift = mo.log_ref - k * mf.log_psi[j + 1];
    double sc = std::exp(shift);
    fw.b[j] = mo.i1 * sc;
    fw.a[j] = (mo.i0 - mo.i1) * sc;
    fw.E[j] = j == 0 ? 0.0 : std::exp(k * (mf.log_psi[j] - mf.log_psi[j + 1]));
  }
  return fw;
}

EllipticSolution solve_dirichlet_ball(const ModelFunction& mf, double k, double m,
                                      double boundary) {
  check_m(m);
  if (!(boundary >= 0)) throw InvalidArgument("boundary value must be nonnegative");
  Setup S(mf, m);
  return newton_ball(S, ball_index(mf, k), boundary);
}

EllipticSolution minimal_solution(const ModelFunction& mf, double m, const BallSchedule& s) {
  return ball_limit(mf, m, s, 0.0, "minimal_solution");
}

EllipticSolution solve_v_alpha(const ModelFunction& mf, double m, double alpha,
                               const BallSchedule& s) {
  if (!(alpha > 0)) throw InvalidArgument("alpha must be positive");
  return ball_limit(mf, m, s, alpha, "solve_v_alpha");
}

EllipticSolution picard_tail_iteration(const ModelFunction& mf, double m,
                                       const RadialField& v_init, const PicardOptions& opt) {
  check_m(m);
  require_same_nodes(mf.grid.r, v_init.r, "picard_tail_iteration");
  const auto& sp = mf.spec;
  if (sp.variant == Variant::Flat || !(sp.mu > 1))
    throw InvalidArgument("the integral route needs mu > 1");
  for (double x : v_init.f)
    if (!(x >= 0)) throw InvalidArgument("initial field must be nonnegative");

  Setup S(mf, m);
  const std::size_t K = mf.size() - 1;
  const double L = mf.grid.L;
  const double a = (sp.mu - 1) / (m - 1);
  const double c = 1.0 / (m - 1);
  std::vector<double> v = v_init.f;
  std::vector<double> W, J;
  double last_diff = 0.0;
  int slow = 0;
  int it = 0;
  bool done = false;
  while (it < opt.max_iter) {
    ++it;
    J = S.forward_flux(v, K);
    // v ~ c_fit r^{-a} on the last decade; integrate J ~ v/((n-1) sqrt Q r^mu) beyond L
    double sum = 0.0;
    int cnt = 0;
    for (std::size_t i = 1; i <= K; ++i) {
      double r = mf.r(i);
      if (r < 0.1 * L || !(v[i] > 0)) continue;
      sum += std::log(v[i]) + a * std::log(r);
      ++cnt;
    }
    double cfit = cnt ? std::exp(sum / cnt) : 0.0;
    double tail = cfit * std::pow(L, 1.0 - a - sp.mu) /
                  ((sp.n - 1) * std::sqrt(sp.Q) * (a + sp.mu - 1));
    W = S.backward(J, K, c * tail, c);
    double diff = 0.0, vmax = 0.0;
    for (std::size_t i = 0; i <= K; ++i) {
      double vn = std::pow(std::max(W[i], 0.0), 1.0 / m);
      diff = std::max(diff, std::abs(vn - v[i]));
      vmax = std::max(vmax, vn);
      v[i] = vn;
    }
    if (diff <= opt.tol * vmax) {
      done = true;
      break;
    }
    slow = (it > 1 && diff > 0.99 * last_diff) ? slow + 1 : 0;
    if (slow >= 20) throw IterationStalled("integral iteration stopped contracting");
    last_diff = diff;
  }
  if (!done) throw IterationStalled("integral iteration hit its budget");

  EllipticSolution sol;
  sol.mf = mf;
  sol.m = m;
  sol.method = EllipticMethod::PicardIntegral;
  sol.radius = L;
  sol.iterations = it;
  sol.v = RadialField(mf.grid.r, v);
  sol.residual = S.defect(W, K);
  sol.max_residual = sol.residual.sup();
  return sol;
}

TailEstimate tail_estimate(const EllipticSolution& sol, double lo, double hi) {
  const auto& sp = sol.mf.spec;
  const double m = sol.m;
  const double a = (sp.mu - 1) / (m - 1);
  double sx = 0, sy = 0, sxx = 0, sxy = 0, sc = 0;
  int cnt = 0;
  for (std::size_t i = 1; i < sol.v.size(); ++i) {
    double r = sol.v.r[i];
    if (r < lo || r > hi || !(sol.v[i] > 0)) continue;
    double x = std::log(r), y = std::log(sol.v[i]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    sc += y + a * x;
    ++cnt;
  }
  if (cnt < 5) throw WindowTooNarrow("tail window holds fewer than 5 nodes");
  TailEstimate t;
  t.lo = lo;
  t.hi = hi;
  t.exponent_fit = (cnt * sxy - sx * sy) / (cnt * sxx - sx * sx);
  t.constant_fit = std::exp(sc / cnt);
  t.target = std::pow(m * (sp.mu - 1) * (sp.n - 1) * std::sqrt(sp.Q), -1.0 / (m - 1));
  return t;
}

SupersolutionW supersolution_W(const ModelFunction& mf, double K, double r0) {
  const double mu = mf.spec.mu;
  const int n = mf.spec.n;
  SupersolutionW out;
  out.K = K;
  out.r0 = r0;
  out.W = RadialField(mf.grid, 0.0);
  out.defect = RadialField(mf.grid, 0.0);
  const double inner_slope = -K * (mu - 1) / std::pow(r0, mu);
  out.worst_defect = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < mf.size(); ++i) {
    double r = mf.r(i);
    if (r < r0) {
      out.W[i] = K / std::pow(r0, mu - 1) * (mu - (mu - 1) * r / r0);
    } else {
      out.W[i] = K / std::pow(r, mu - 1);
    }
    if (i == 0) continue;
    double lap_in = (n - 1) * mf.p[i] * inner_slope;
    double d1 = -K * (mu - 1) * std::pow(r, -mu);
    double d2 = K * mu * (mu - 1) * std::pow(r, -mu - 1);
    double lap_out = d2 + (n - 1) * mf.p[i] * d1;
    double minus_lap;
    if (r < r0) minus_lap = -lap_in;
    else if (r > r0) minus_lap = -lap_out;
    else minus_lap = std::min(-lap_in, -lap_out);
    out.defect[i] = minus_lap - 1.0;
    out.worst_defect = std::min(out.worst_defect, out.defect[i]);
  }
  out.feasible = out.worst_defect >= 0;
  return out;
}

SupersolutionW find_supersolution_W(const ModelFunction& mf) {
  SupersolutionW last;
  for (double K = 1e-2; K <= 1e6; K *= 2) {
    for (double r0 = 1.0; r0 <= mf.grid.L / 2; r0 *= 2) {
      last = supersolution_W(mf, K, r0);
      if (last.feasible) return last;
    }
  }
  return last;
}

RadialField alpha_envelope(const SupersolutionW& W, double m, double alpha) {
  check_m(m);
  const double am = std::pow(alpha, m);
  const double W0 = W.W.sup();
  double C = 1.0 + am + W0;
  for (int it = 0; it < 500; ++it) C = std::pow(C * W0 + am, 1.0 / m) / (m - 1);
  C *= 1.0 + 1e-9;
  RadialField V = W.W;
  for (double& x : V.f) x = std::pow(C * x + am, 1.0 / m);
  return V;
}

void write_elliptic_csv(const std::string& path, const EllipticSolution& sol) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  out << "r,v,vm,residual\n";
  char buf[128];
  for (std::size_t i = 0; i < sol.v.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g", sol.v.r[i], sol.v[i],
                  std::pow(sol.v[i], sol.m), sol.residual[i]);
    out << buf << "\n";
  }
}

std::string tail_to_json(const TailEstimate& t) {
  nlohmann::ordered_json j;
  j["exponent_fit"] = t.exponent_fit;
  j["constant_fit"] = t.constant_fit;
  j["target"] = t.target;
  j["window"] = {t.lo, t.hi};
  return j.dump(2);
}

}  // namespace pmelab
