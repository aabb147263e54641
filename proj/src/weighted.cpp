#include "pmelab/weighted.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>

// Boost 1.74 pchip calls isnan unqualified
using std::isnan;
#include <boost/math/interpolators/pchip.hpp>
#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/tools/toms748_solve.hpp>

#include "json.hpp"
#include "pmelab/errors.hpp"
#include "pmelab/quadrature.hpp"

namespace pmelab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
using Pchip = boost::math::interpolators::pchip<std::vector<double>>;
using Gauss = boost::math::quadrature::gauss<double, 10>;

double slope_of(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = double(x.size());
  double sx = 0, sy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
  }
  const double mx = sx / n, my = sy / n;
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  return sxy / sxx;
}

// int_a^b t^{1-n} exp(-(n-1) chi(t)) dt with chi = log psi - log t as a cubic Hermite piece
double core_integral(double a, double b, double ca, double cb, double da, double db, int n) {
  const double h = b - a;
  auto chi = [&](double t) {
    const double x = (t - a) / h;
    const double h00 = (1 + 2 * x) * (1 - x) * (1 - x), h10 = x * (1 - x) * (1 - x);
    const double h01 = x * x * (3 - 2 * x), h11 = x * x * (x - 1);
    return h00 * ca + h10 * h * da + h01 * cb + h11 * h * db;
  };
  return Gauss::integrate(
      [&](double t) { return std::pow(t, 1.0 - n) * std::exp(-(n - 1) * chi(t)); }, a, b);
}

// Fornberg weights for derivatives 0..2 at z on the nodes x
void fd_weights(double z, const double* x, int npts, double c[][3]) {
  double c1 = 1.0, c4 = x[0] - z;
  for (int i = 0; i < npts; ++i)
    for (int k = 0; k < 3; ++k) c[i][k] = 0.0;
  c[0][0] = 1.0;
  for (int i = 1; i < npts; ++i) {
    const int mn = std::min(i, 2);
    double c2 = 1.0;
    const double c5 = c4;
    c4 = x[i] - z;
    for (int j = 0; j < i; ++j) {
      const double c3 = x[i] - x[j];
      c2 *= c3;
      if (j == i - 1) {
        for (int k = mn; k >= 1; --k) c[i][k] = c1 * (k * c[i - 1][k - 1] - c5 * c[i - 1][k]) / c2;
        c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
      }
      for (int k = mn; k >= 1; --k) c[j][k] = (c4 * c[j][k] - k * c[j][k - 1]) / c3;
      c[j][0] = c4 * c[j][0] / c3;
    }
    c1 = c2;
  }
}

}  // namespace

struct CvInterp {
  Pchip s_of_r;  // log s - log r against r
  double r_first = 0.0, ls_first = 0.0;
  double r_last = 0.0, ls_last = 0.0;
};

double ChangeOfVariables::log_s_at(double r) const {
  if (r <= 0.0) return -kInf;
  if (r >= interp->r_last) return interp->ls_last;
  return std::log(r) + interp->s_of_r(r);
}

double ChangeOfVariables::r_of_log_s(double ls) const {
  const auto& r = mf.grid.r;
  if (ls <= interp->ls_first) return r[1] * std::exp(ls - interp->ls_first);
  if (ls >= interp->ls_last) return interp->r_last;
  // invert the monotone forward cubic inside the bracketing interval
  std::size_t j = std::upper_bound(log_s.begin() + 1, log_s.end(), ls) - log_s.begin() - 1;
  if (ls == log_s[j]) return r[j];
  auto f = [&](double x) { return log_s_at(x) - ls; };
  std::uintmax_t iters = 100;
  auto br = boost::math::tools::toms748_solve(f, r[j], r[j + 1], log_s[j] - ls, log_s[j + 1] - ls,
                                              boost::math::tools::eps_tolerance<double>(50), iters);
  return 0.5 * (br.first + br.second);
}

double ChangeOfVariables::log_rho_at(double ls) const {
  const std::size_t N = size() - 1;
  if (ls <= log_s[1]) return log_rho[1];
  if (ls >= log_s[N]) return log_rho[N] + 2.0 * (log_s[N] - ls);
  std::size_t j = std::upper_bound(log_s.begin() + 1, log_s.end(), ls) - log_s.begin() - 1;
  const double x = (ls - log_s[j]) / (log_s[j + 1] - log_s[j]);
  const double a = log_rho[j] + 2.0 * log_s[j], b = log_rho[j + 1] + 2.0 * log_s[j + 1];
  return a + x * (b - a) - 2.0 * ls;
}

ChangeOfVariables build_change_of_variables(const ModelFunction& mf) {
  const int n = mf.spec.n;
  if (n < 3) throw DimensionTooLow("the change of variables needs n >= 3");
  const auto& r = mf.grid.r;
  const std::size_t N = mf.size() - 1;
  if (N < 3) throw InvalidArgument("grid too small");

  std::vector<double> chi(N + 1, 0.0), dchi(N + 1, 0.0);
  for (std::size_t i = 1; i <= N; ++i) {
    chi[i] = mf.log_psi[i] - std::log(r[i]);
    dchi[i] = mf.p[i] - 1.0 / r[i];
  }

  // log int_r^inf psi^{1-n}; the tail beyond L keeps the first correction of Laplace's method,
  // which is exact for powers of r
  std::vector<double> logF(N + 1);
  {
    const double p = mf.p[N], w = mf.w[N];
    logF[N] = -(n - 1) * mf.log_psi[N] - std::log(((n - 2) * p * p + w) / p);
  }
  for (std::size_t i = N; i-- > 1;) {
    const double h = r[i + 1] - r[i];
    double piece;
    const double spread = (n - 1) * std::max(std::abs(chi[i + 1] - chi[i]),
                                             h * std::max(std::abs(dchi[i]), std::abs(dchi[i + 1])));
    if (spread <= 1.0)
      piece = std::log(core_integral(r[i], r[i + 1], chi[i], chi[i + 1], dchi[i], dchi[i + 1], n));
    else
      piece = log_int_psi_pow(mf, 1.0 - n, r[i], r[i + 1]);
    logF[i] = log_add(logF[i + 1], piece);
  }

  ChangeOfVariables cv;
  cv.mf = mf;
  cv.log_s.assign(N + 1, -kInf);
  cv.log_rho.assign(N + 1, 0.0);
  for (std::size_t i = 1; i <= N; ++i) {
    cv.log_s[i] = -(std::log(double(n - 2)) + logF[i]) / (n - 2);
    cv.log_rho[i] = 2.0 * (n - 1) * (mf.log_psi[i] - cv.log_s[i]);
  }
  for (std::size_t i = 2; i <= N; ++i)
    if (!(cv.log_s[i] > cv.log_s[i - 1]))
      throw InvalidArgument("s(r) is not increasing at r = " + std::to_string(r[i]));

  // log s - log r is smooth in r and vanishes at the origin
  std::vector<double> rr(r), gap(N + 1, 0.0);
  for (std::size_t i = 1; i <= N; ++i) gap[i] = cv.log_s[i] - std::log(r[i]);
  auto in = std::make_shared<CvInterp>(CvInterp{Pchip(std::move(rr), std::move(gap))});
  in->r_first = r[1];
  in->ls_first = cv.log_s[1];
  in->r_last = r[N];
  in->ls_last = cv.log_s[N];
  cv.interp = in;
  return cv;
}

void write_change_of_variables_csv(const std::string& path, const ChangeOfVariables& cv) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  out << "r,s,rho,log_s,log_rho\n";
  char buf[160];
  for (std::size_t i = 0; i < cv.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g,%.17g\n", cv.mf.r(i),
                  std::exp(cv.log_s[i]), std::exp(cv.log_rho[i]), cv.log_s[i], cv.log_rho[i]);
    out << buf;
  }
  if (!out) throw IoError("write failed: " + path);
}

WeightWindow outer_window(const ChangeOfVariables& cv) {
  const double hi = cv.log_s.back();
  return {hi / 10.0, hi};
}

WeightFit fit_weight(const ChangeOfVariables& cv, WeightWindow window) {
  if (!(window.lo > 1.0) || !(window.hi > window.lo))
    throw InvalidArgument("window must satisfy 1 < log s_lo < log s_hi");
  if (window.hi > cv.log_s.back() * (1 + 1e-12) || window.lo < cv.log_s[1])
    throw WindowOutsideDomain("window outside the s-grid");
  std::vector<double> x, y, ls, lr;
  for (std::size_t i = 1; i < cv.size(); ++i) {
    if (cv.log_s[i] < window.lo || cv.log_s[i] > window.hi) continue;
    ls.push_back(cv.log_s[i]);
    lr.push_back(cv.log_rho[i]);
    x.push_back(std::log(cv.log_s[i]));
    y.push_back(cv.log_rho[i] + 2.0 * cv.log_s[i]);
  }
  if (x.size() < 8 || window.hi < 1.5 * window.lo)
    throw WindowTooNarrow("weight fit needs 8 nodes over a factor 1.5 in log s");

  WeightFit fit;
  fit.window = window;
  fit.nodes = int(x.size());
  fit.power_fit = slope_of(ls, lr);
  if (std::abs(fit.power_fit + 2.0) > 0.25) return fit;
  fit.nu_fit = -slope_of(x, y);
  fit.K1_fit = kInf;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double k = std::exp(y[i] + fit.nu_fit * x[i]);
    fit.K1_fit = std::min(fit.K1_fit, k);
    fit.K2_fit = std::max(fit.K2_fit, k);
  }
  fit.in_regime = fit.nu_fit > 1.0;
  return fit;
}

std::string to_json(const WeightFit& f) {
  nlohmann::ordered_json j;
  j["nu_fit"] = f.nu_fit;
  j["K1_fit"] = f.K1_fit;
  j["K2_fit"] = f.K2_fit;
  j["window_log_s"] = {f.window.lo, f.window.hi};
  j["power_fit"] = f.power_fit;
  j["in_regime"] = f.in_regime;
  j["nodes"] = f.nodes;
  return j.dump(2);
}

WeightedField transform_solution(const ChangeOfVariables& cv, const RadialField& u) {
  require_same_nodes(cv.mf.grid.r, u.r, "transform_solution");
  return {cv.log_s, u.f};
}

WeightedField transform_solution(const ChangeOfVariables& cv, const RadialField& u,
                                 const std::vector<double>& log_s_nodes) {
  require_same_nodes(cv.mf.grid.r, u.r, "transform_solution");
  WeightedField out;
  out.log_s = log_s_nodes;
  out.f.reserve(log_s_nodes.size());
  for (double ls : log_s_nodes) out.f.push_back(u.at(cv.r_of_log_s(ls)));
  return out;
}

std::vector<double> weighted_laplacian(const ChangeOfVariables& cv, const std::vector<double>& f,
                                       double log_s_max) {
  const int n = cv.mf.spec.n;
  const std::size_t N = cv.size() - 1;
  if (f.size() != N + 1) throw GridMismatch("weighted_laplacian: field size differs");
  std::vector<double> lap(N + 1, std::nan(""));
  std::vector<double> s(N + 1);
  for (std::size_t i = 0; i <= N; ++i) s[i] = std::exp(cv.log_s[i]);
  // five-point stencils; radial fields are even, so nodes mirror across the origin
  auto node = [&](long k, double& x, double& v) {
    const std::size_t a = std::size_t(std::labs(k));
    x = k < 0 ? -s[a] : s[a];
    v = f[a];
  };
  for (std::size_t j = 1; j + 2 <= N && cv.log_s[j + 2] <= log_s_max; ++j) {
    double x[5], v[5], c[5][3];
    for (int k = 0; k < 5; ++k) node(long(j) + k - 2, x[k], v[k]);
    fd_weights(s[j], x, 5, c);
    double d1 = 0.0, d2 = 0.0;
    for (int k = 0; k < 5; ++k) {
      d1 += c[k][1] * v[k];
      d2 += c[k][2] * v[k];
    }
    lap[j] = d2 + (n - 1) * d1 / s[j];
  }
  return lap;
}

WeightedResidual weighted_pme_residual(const ChangeOfVariables& cv, const RadialField& u_prev,
                                       const RadialField& u_next, double dt, double m,
                                       double r_min, double log_s_max) {
  require_same_nodes(cv.mf.grid.r, u_prev.r, "weighted_pme_residual");
  require_same_nodes(cv.mf.grid.r, u_next.r, "weighted_pme_residual");
  if (!(dt > 0)) throw InvalidArgument("dt must be positive");
  const std::size_t N = cv.size() - 1;
  std::vector<double> W(N + 1);
  for (std::size_t i = 0; i <= N; ++i) W[i] = std::pow(u_next[i], m);
  const auto lap = weighted_laplacian(cv, W, log_s_max);

  std::size_t front = 0;
  for (std::size_t i = 0; i <= N; ++i)
    if (u_next[i] > 0.0) front = i;

  WeightedResidual out;
  double scale = 0.0;
  std::vector<double> raw;
  for (std::size_t j = 1; j < N; ++j) {
    if (std::isnan(lap[j]) || cv.mf.r(j) < r_min) continue;
    if (j + 5 >= front && j <= front + 5) continue;
    if (j > front + 5) break;
    const double rho = std::exp(cv.log_rho[j]);
    const double ut = (u_next[j] - u_prev[j]) / dt;
    scale = std::max(scale, rho * std::abs(ut));
    out.log_s.push_back(cv.log_s[j]);
    raw.push_back(rho * ut - lap[j]);
  }
  if (raw.empty()) throw InvalidArgument("no interior s-nodes to check");
  if (!(scale > 0)) scale = 1.0;
  for (double x : raw) {
    out.residual.push_back(x / scale);
    out.worst = std::max(out.worst, std::abs(x / scale));
  }
  return out;
}

std::string to_json(const WeightedBarrierParams& p) {
  nlohmann::ordered_json j;
  j["C1"] = p.C1;
  j["C2"] = p.C2;
  j["gamma1"] = p.gamma1;
  j["gamma2"] = p.gamma2;
  j["t0"] = p.t0;
  j["R0"] = p.R0;
  j["log_R0"] = std::log(p.R0);
  j["m"] = p.m;
  j["nu"] = p.nu;
  j["n"] = p.n;
  return j.dump(2);
}

double weighted_barrier(double C, double gamma, const WeightedBarrierParams& p, double log_s,
                        double t) {
  const double T = t + p.t0;
  const double A = std::pow(log_s, 1.0 - p.nu) - gamma * std::pow(std::log(T), 1.0 - p.nu);
  if (!(A > 0.0)) return 0.0;
  const double q = 1.0 / (p.m - 1.0);
  return C * std::pow(T, -q) * std::pow(A, q);
}

namespace {

void check_weighted_params(const WeightedBarrierParams& p) {
  if (!(p.m > 1.0)) throw InvalidArgument("m must exceed 1");
  if (!(p.nu > 1.0)) throw InvalidArgument("nu must exceed 1");
  if (!(p.R0 > 2.0)) throw InvalidArgument("R0 must exceed 2");
  if (!(p.t0 > 1.0)) throw InvalidArgument("t0 must exceed 1");
  if (p.n < 3) throw DimensionTooLow("weighted barriers need n >= 3");
}

// smallest margins first, as in the barrier module
class Margins {
 public:
  void add(double r, double t, double margin, const char* what) {
    if (std::isnan(margin)) margin = -kInf;
    w_.push_back({r, t, margin, what});
    std::sort(w_.begin(), w_.end(),
              [](const Witness& a, const Witness& b) { return a.margin < b.margin; });
    if (w_.size() > 5) w_.pop_back();
  }
  FeasibilityReport report() const {
    FeasibilityReport rep;
    rep.witnesses = w_;
    rep.worst_margin = w_.empty() ? 0.0 : w_.front().margin;
    rep.satisfied = rep.worst_margin >= 0.0;
    return rep;
  }

 private:
  std::vector<Witness> w_;
};

// (rho u_t - Delta_s u^m) s^2 (log s)^nu (t+t0)^{m/(m-1)}/C over the sum of term sizes;
// rho_t = rho s^2 (log s)^nu
double weighted_margin(double C, double gamma, const WeightedBarrierParams& p, double ls,
                       double t, double rho_t, bool super) {
  const double m = p.m, nu = p.nu, q = 1.0 / (m - 1.0);
  const double L = std::log(t + p.t0);
  const double A = std::pow(ls, 1.0 - nu) - gamma * std::pow(L, 1.0 - nu);
  const double Cm1 = std::pow(C, m - 1.0);
  const double l1 = -rho_t * q * std::pow(A, q);
  const double l2 = rho_t * q * gamma * (nu - 1.0) * std::pow(L, -nu) * std::pow(A, q - 1.0);
  const double r1 = Cm1 * m * q * (nu - 1.0) * std::pow(A, q) * (-(p.n - 2.0) + nu / ls);
  const double r2 = Cm1 * m * q * q * (nu - 1.0) * (nu - 1.0) * std::pow(A, q - 1.0) *
                    std::pow(ls, -nu);
  const double res = l1 + l2 - r1 - r2;
  const double size = std::abs(l1) + std::abs(l2) + std::abs(r1) + std::abs(r2);
  return (super ? res : -res) / size;
}

void residual_checks(const ChangeOfVariables& cv, const WeightedBarrierParams& p,
                     const std::vector<double>& times, Margins& out) {
  const double l0 = std::log(p.R0), lmax = cv.log_s.back();
  if (!(lmax > l0)) return;
  std::vector<double> ls;
  const int K = 400;
  for (int k = 0; k <= K; ++k) ls.push_back(l0 * std::pow(lmax / l0, double(k) / K));
  for (double t : times) {
    const double L = std::log(t + p.t0);
    for (int kind = 0; kind < 2; ++kind) {
      const bool super = kind == 0;
      const double C = super ? p.C2 : p.C1, g = super ? p.gamma2 : p.gamma1;
      if (!(C > 0.0)) continue;
      // free boundary in log s
      const double lfb = std::pow(g, -1.0 / (p.nu - 1.0)) * L;
      std::vector<double> pts = ls;
      for (int k = 1; k <= 30; ++k) pts.push_back(lfb * (1.0 - 0.01 * k));
      for (double l : pts) {
        if (l < l0 || l > lmax) continue;
        const double A = std::pow(l, 1.0 - p.nu) - g * std::pow(L, 1.0 - p.nu);
        if (A < 1e-3 * std::pow(l, 1.0 - p.nu)) continue;
        const double rho_t = std::exp(cv.log_rho_at(l) + 2.0 * l + p.nu * std::log(l));
        out.add(cv.r_of_log_s(l), t, weighted_margin(C, g, p, l, t, rho_t, super),
                super ? "upper residual" : "lower residual");
      }
    }
  }
}

}  // namespace

FeasibilityReport check_weighted_residual(const ChangeOfVariables& cv,
                                          const WeightedBarrierParams& p,
                                          const std::vector<double>& times) {
  check_weighted_params(p);
  Margins mg;
  residual_checks(cv, p, times, mg);
  return mg.report();
}

FeasibilityReport check_weighted_barriers(const ChangeOfVariables& cv,
                                          const std::vector<Snapshot>& snapshots,
                                          const WeightedBarrierParams& p) {
  check_weighted_params(p);
  Margins mg;
  const double l0 = std::log(p.R0);
  double scale = 0.0;
  for (const auto& s : snapshots) scale = std::max(scale, s.u.sup());
  if (!(scale > 0)) scale = 1.0;
  std::vector<double> times;
  for (const auto& s : snapshots) {
    require_same_nodes(cv.mf.grid.r, s.u.r, "check_weighted_barriers");
    times.push_back(s.t);
    for (std::size_t i = 1; i < cv.size(); ++i) {
      if (cv.log_s[i] < l0) continue;
      const double up = weighted_barrier(p.C2, p.gamma2, p, cv.log_s[i], s.t);
      const double lo = weighted_barrier(p.C1, p.gamma1, p, cv.log_s[i], s.t);
      mg.add(cv.mf.r(i), s.t, (up - s.u[i]) / scale, "upper sandwich");
      mg.add(cv.mf.r(i), s.t, (s.u[i] - lo) / scale, "lower sandwich");
    }
  }
  residual_checks(cv, p, times, mg);
  return mg.report();
}

WeightedBarrierParams find_weighted_barrier_params(const ChangeOfVariables& cv,
                                                   const WeightedSearchInputs& in) {
  const double nu = in.fit.nu_fit, m = in.m;
  const int n = in.n;
  if (!(nu > 1.0)) throw InvalidArgument("weight outside the nu > 1 regime");
  if (!(m > 1.0)) throw InvalidArgument("m must exceed 1");
  if (!(in.tau > 0.0)) throw InvalidArgument("tau must be positive");
  require_same_nodes(cv.mf.grid.r, in.v.r, "find_weighted_barrier_params");
  require_same_nodes(cv.mf.grid.r, in.u0.r, "find_weighted_barrier_params");
  require_same_nodes(cv.mf.grid.r, in.U_T.r, "find_weighted_barrier_params");
  const std::size_t N = cv.size() - 1;
  const double q = 1.0 / (m - 1.0);

  WeightedBarrierParams p;
  p.m = m;
  p.nu = nu;
  p.n = n;
  p.t0 = std::max(in.tau, std::exp(1.0) * (1 + 1e-9));
  const double logt0 = std::log(p.t0);

  // envelope of rho s^2 (log s)^nu over the nodes beyond R0
  std::vector<double> K1(N + 2, kInf), K2(N + 2, 0.0);
  for (std::size_t i = N + 1; i-- > 1;) {
    const double k = std::exp(cv.log_rho[i] + 2.0 * cv.log_s[i] + nu * std::log(cv.log_s[i]));
    K1[i] = std::min(K1[i + 1], k);
    K2[i] = std::max(K2[i + 1], k);
  }

  const double l_start = std::max({std::log(2.0) * 1.0001, 2.0 * nu / (n - 2.0), 1.0});
  for (std::size_t i = 1; i + 8 < N; ++i) {
    const double l0 = cv.log_s[i];
    if (l0 < l_start) continue;
    const double xmax = std::pow(l0, 1.0 - nu);
    bool clear = true;
    for (std::size_t j = i; j <= N; ++j)
      if (in.u0[j] > 0.0) clear = false;
    if (!clear) continue;
    const double M = in.v[i];
    const double Cm1 = 1.01 * std::max(4.0 * K2[i] / (m * (nu - 1.0) * (n - 2.0)),
                                       2.0 * std::pow(M, m - 1.0) * (p.t0 / in.tau) / xmax);
    const double D = Cm1 * m * (nu - 1.0) * (nu - 1.0) / (m - 1.0);
    if (l0 < 2.0 * D / K2[i]) continue;
    p.R0 = std::exp(l0);
    p.C2 = std::pow(Cm1, q);
    p.gamma2 = 0.99 * std::min(std::pow(K1[i] * (nu - 1.0) / D, nu - 1.0),
                               0.5 * std::pow(logt0 / l0, nu - 1.0));

    const double I = in.U_T[i];
    if (I > 0.0) {
      const double c1 = 0.99 * std::min(K1[i] / (2.0 * m * (nu - 1.0) * (n - 2.0)),
                                        std::pow(I, m - 1.0) / xmax);
      const double D1 = c1 * m * (nu - 1.0) * (nu - 1.0) / (m - 1.0);
      p.C1 = std::pow(c1, q);
      p.gamma1 = 1.01 * std::max(std::pow(K2[i] * (nu - 1.0) / D1, nu - 1.0),
                                 std::pow(std::log(in.T + p.t0) / l0, nu - 1.0));
    }
    return p;
  }
  throw NoFeasibleParams("no R0 on the grid meets the weighted barrier conditions");
}

WeightedTail weighted_minimal_tail(const WeightFit& fit, const WeightedField& V, double m, int n,
                                   WeightWindow window) {
  if (!fit.in_regime || !(fit.nu_fit > 1.0))
    throw InvalidArgument("weight outside the nu > 1 regime");
  if (!(m > 1.0)) throw InvalidArgument("m must exceed 1");
  if (n < 3) throw DimensionTooLow("weighted tail needs n >= 3");
  const double e = (fit.nu_fit - 1.0) / (m - 1.0);
  WeightedTail out;
  out.window = window;
  out.liminf_const = kInf;
  int count = 0;
  for (std::size_t i = 0; i < V.size(); ++i) {
    const double ls = V.log_s[i];
    if (!(ls >= window.lo && ls <= window.hi)) continue;
    const double c = V.f[i] * std::pow(ls, e);
    out.liminf_const = std::min(out.liminf_const, c);
    out.limsup_const = std::max(out.limsup_const, c);
    ++count;
  }
  if (count < 4) throw WindowTooNarrow("tail window holds fewer than 4 nodes");
  const double den = m * (fit.nu_fit - 1.0) * (n - 2.0);
  out.target_low = std::pow(fit.K1_fit / den, 1.0 / (m - 1.0));
  out.target_high = std::pow(fit.K2_fit / den, 1.0 / (m - 1.0));
  return out;
}

std::string to_json(const WeightedTail& t) {
  nlohmann::ordered_json j;
  j["liminf_const"] = t.liminf_const;
  j["limsup_const"] = t.limsup_const;
  j["target_low"] = t.target_low;
  j["target_high"] = t.target_high;
  j["window_log_s"] = {t.window.lo, t.window.hi};
  return j.dump(2);
}

}  // namespace pmelab
