#include "pmelab/model_manifold.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>

#include <boost/math/tools/roots.hpp>
#include <boost/numeric/odeint.hpp>

#include "pmelab/errors.hpp"

namespace pmelab {

namespace {

constexpr double kSwitchRadius = 0.5;
const double kNaN = std::numeric_limits<double>::quiet_NaN();
const double kInf = std::numeric_limits<double>::infinity();

}  // namespace

std::string to_string(Variant v) {
  switch (v) {
    case Variant::Flat: return "Flat";
    case Variant::RampThenPower: return "RampThenPower";
    case Variant::FloorMaxPower: return "FloorMaxPower";
    case Variant::ExplicitExp: return "ExplicitExp";
  }
  return "?";
}

Variant variant_from_string(const std::string& s) {
  if (s == "Flat") return Variant::Flat;
  if (s == "RampThenPower") return Variant::RampThenPower;
  if (s == "FloorMaxPower") return Variant::FloorMaxPower;
  if (s == "ExplicitExp") return Variant::ExplicitExp;
  throw InvalidArgument("unknown curvature variant '" + s + "'");
}

CurvatureSpec CurvatureSpec::flat(int n) {
  CurvatureSpec s;
  s.n = n;
  s.variant = Variant::Flat;
  s.mu = 0.0;
  s.Q = 0.0;
  return s;
}

CurvatureSpec CurvatureSpec::ramp_then_power(int n, double mu, double Q, double R) {
  CurvatureSpec s;
  s.n = n;
  s.mu = mu;
  s.Q = Q;
  s.R = R;
  s.variant = Variant::RampThenPower;
  s.validate();
  return s;
}

CurvatureSpec CurvatureSpec::floor_max_power(int n, double mu, double Q, double D) {
  CurvatureSpec s;
  s.n = n;
  s.mu = mu;
  s.Q = Q;
  s.D = D;
  s.variant = Variant::FloorMaxPower;
  s.validate();
  return s;
}

CurvatureSpec CurvatureSpec::explicit_exp(int n, double a, double A, double alpha) {
  if (!(alpha > 2) || !(a > 0) || !(A > 0))
    throw InvalidArgument("ExplicitExp needs alpha > 2, a > 0, A > 0");
  CurvatureSpec s;
  s.n = n;
  s.variant = Variant::ExplicitExp;
  s.a = a;
  s.A = A;
  s.alpha = alpha;
  s.mu = alpha - 1.0;
  s.Q = (a * alpha) * (a * alpha);
  // log(a A alpha) + (alpha-1) log r + a r^alpha is increasing in r
  auto f = [&](double r) {
    return std::log(a * A * alpha) + (alpha - 1.0) * std::log(r) + a * std::pow(r, alpha);
  };
  double lo = 1e-300, hi = 1.0;
  while (f(hi) < 0) hi *= 2.0;
  while (f(lo * 1e10) < 0 && lo * 1e10 < hi) lo *= 1e10;
  boost::uintmax_t it = 200;
  auto res = boost::math::tools::toms748_solve(
      f, lo, hi, boost::math::tools::eps_tolerance<double>(52), it);
  s.rbar = 0.5 * (res.first + res.second);
  s.R = s.rbar;
  return s;
}

double CurvatureSpec::floor_value() const {
  return D > 0 ? D : Q * std::pow(2.0 * R, 2.0 * mu);
}

double CurvatureSpec::w(double r) const {
  switch (variant) {
    case Variant::Flat:
      return 0.0;
    case Variant::RampThenPower:
      if (r <= R) return 0.0;
      if (r <= 2 * R) return Q * std::pow(2 * R, 2 * mu) / R * (r - R);
      return Q * std::pow(r, 2 * mu);
    case Variant::FloorMaxPower:
      return std::max(floor_value(), Q * std::pow(r, 2 * mu));
    case Variant::ExplicitExp: {
      if (r <= rbar) return 0.0;
      double ra = std::pow(r, alpha);
      double num = A * (a * alpha * (alpha - 1) * std::pow(r, alpha - 2) +
                        a * a * alpha * alpha * std::pow(r, 2 * alpha - 2));
      double den = A * (1.0 - std::exp(a * (std::pow(rbar, alpha) - ra))) +
                   rbar * std::exp(-a * ra);
      return num / den;
    }
  }
  return 0.0;
}

std::vector<double> CurvatureSpec::breakpoints() const {
  switch (variant) {
    case Variant::Flat: return {};
    case Variant::RampThenPower: return {R, 2 * R};
    case Variant::FloorMaxPower: return {std::pow(floor_value() / Q, 0.5 / mu)};
    case Variant::ExplicitExp: return {rbar};
  }
  return {};
}

void CurvatureSpec::validate() const {
  if (n < 2) throw InvalidArgument("dimension n must be >= 2");
  if (variant == Variant::Flat) return;
  if (!(Q > 0) || !(R > 0)) throw InvalidArgument("Q and R must be positive");
  if (!(mu >= -1)) throw InvalidArgument("mu must be >= -1");
  if (variant == Variant::ExplicitExp && (!(alpha > 2) || !(a > 0) || !(A > 0)))
    throw InvalidArgument("ExplicitExp needs alpha > 2, a > 0, A > 0");
}

double explicit_psi(const CurvatureSpec& s, double r) {
  if (r <= s.rbar) return r;
  return s.A * (std::exp(s.a * std::pow(r, s.alpha)) - std::exp(s.a * std::pow(s.rbar, s.alpha))) + s.rbar;
}

double explicit_dpsi(const CurvatureSpec& s, double r) {
  if (r <= s.rbar) return 1.0;
  return s.A * s.a * s.alpha * std::pow(r, s.alpha - 1) * std::exp(s.a * std::pow(r, s.alpha));
}

namespace {

namespace ode = boost::numeric::odeint;
namespace ublas = boost::numeric::ublas;
using vec2 = ublas::vector<double>;
using mat2 = ublas::matrix<double>;

double w_prime(const CurvatureSpec& s, double r) {
  switch (s.variant) {
    case Variant::Flat: return 0.0;
    case Variant::RampThenPower:
      if (r <= s.R) return 0.0;
      if (r <= 2 * s.R) return s.Q * std::pow(2 * s.R, 2 * s.mu) / s.R;
      return 2 * s.mu * s.Q * std::pow(r, 2 * s.mu - 1);
    case Variant::FloorMaxPower:
      return s.Q * std::pow(r, 2 * s.mu) > s.floor_value()
                 ? 2 * s.mu * s.Q * std::pow(r, 2 * s.mu - 1)
                 : 0.0;
    case Variant::ExplicitExp: {
      if (r <= s.rbar) return 0.0;
      double h = 1e-6 * r;
      if (r - h <= s.rbar)
        return (-3 * s.w(r) + 4 * s.w(r + h) - s.w(r + 2 * h)) / (2 * h);
      return (s.w(r + h) - s.w(r - h)) / (2 * h);
    }
  }
  return 0.0;
}

// w is only piecewise smooth; evaluate it from inside the current piece
struct Piece {
  double lo = 0.0, hi = 0.0;
  double inside(double r) const {
    double e = 1e-13 * std::max(1.0, hi);
    return std::clamp(r, lo + e, hi - e);
  }
};

// psi'' = w psi
struct LinearRhs {
  const CurvatureSpec* s;
  const Piece* piece;
  void operator()(const std::array<double, 2>& y, std::array<double, 2>& dy, double r) const {
    dy[0] = y[1];
    dy[1] = s->w(piece->inside(r)) * y[0];
  }
};

// phi' = p, p' = w - p^2, r' = 1
// autonomous: the stepper's explicit time derivative path is only first order
struct LogRhs {
  const CurvatureSpec* s;
  const Piece* piece;
  void operator()(const vec2& x, vec2& dx, double) const {
    dx[0] = x[1];
    dx[1] = s->w(piece->inside(x[2])) - x[1] * x[1];
    dx[2] = 1.0;
  }
};

struct LogJac {
  const CurvatureSpec* s;
  const Piece* piece;
  void operator()(const vec2& x, mat2& J, const double&, vec2& dfdt) const {
    J.clear();
    J(0, 1) = 1.0;
    J(1, 1) = -2.0 * x[1];
    J(1, 2) = w_prime(*s, piece->inside(x[2]));
    dfdt[0] = dfdt[1] = dfdt[2] = 0.0;
  }
};

// sub-interval ends of [a, b] cut at the spec's kinks
std::vector<double> pieces(double a, double b, const std::vector<double>& kinks) {
  std::vector<double> out{a};
  for (double k : kinks)
    if (k > a * (1 + 1e-14) && k < b * (1 - 1e-14)) out.push_back(k);
  out.push_back(b);
  return out;
}

double hermite(double x0, double x1, double f0, double f1, double d0, double d1, double x) {
  double h = x1 - x0;
  double t = (x - x0) / h;
  double t2 = t * t, t3 = t2 * t;
  return (2 * t3 - 3 * t2 + 1) * f0 + (t3 - 2 * t2 + t) * h * d0 +
         (-2 * t3 + 3 * t2) * f1 + (t3 - t2) * h * d1;
}

double hermite_slope(double x0, double x1, double f0, double f1, double d0, double d1, double x) {
  double h = x1 - x0;
  double t = (x - x0) / h;
  double t2 = t * t;
  return ((6 * t2 - 6 * t) * f0 + (3 * t2 - 4 * t + 1) * h * d0 +
          (-6 * t2 + 6 * t) * f1 + (3 * t2 - 2 * t) * h * d1) / h;
}

}  // namespace

ModelFunction build_psi(const CurvatureSpec& spec, const RadialGrid& grid) {
  spec.validate();
  grid.validate();
  ModelFunction mf;
  mf.grid = grid;
  mf.spec = spec;
  const std::size_t N = grid.size();
  mf.log_psi.assign(N, 0.0);
  mf.p.assign(N, 0.0);
  mf.w.assign(N, 0.0);
  for (std::size_t i = 0; i < N; ++i) mf.w[i] = spec.w(grid.r[i]);
  mf.log_psi[0] = -kInf;
  mf.p[0] = kInf;

  if (spec.variant == Variant::Flat) {
    for (std::size_t i = 1; i < N; ++i) {
      mf.log_psi[i] = std::log(grid.r[i]);
      mf.p[i] = 1.0 / grid.r[i];
    }
    return mf;
  }

  const auto kinks = spec.breakpoints();
  Piece piece;
  LinearRhs lin{&spec, &piece};
  ode::runge_kutta4<std::array<double, 2>> rk4;
  std::array<double, 2> y{0.0, 1.0};
  std::size_t i = 0;
  for (; i + 1 < N && grid.r[i] < kSwitchRadius; ++i) {
    auto cuts = pieces(grid.r[i], grid.r[i + 1], kinks);
    for (std::size_t k = 0; k + 1 < cuts.size(); ++k) {
      piece = {cuts[k], cuts[k + 1]};
      double len = cuts[k + 1] - cuts[k];
      // resolve exp(sqrt(w) r) growth near the origin
      double wmax = std::max(std::abs(spec.w(piece.inside(cuts[k]))),
                             std::abs(spec.w(piece.inside(cuts[k + 1]))));
      int sub = std::max(1, int(std::ceil(len * std::sqrt(wmax) / 0.02)));
      double dh = len / sub;
      for (int q = 0; q < sub; ++q) rk4.do_step(lin, y, cuts[k] + q * dh, dh);
    }
    mf.log_psi[i + 1] = std::log(y[0]);
    mf.p[i + 1] = y[1] / y[0];
  }

  LogRhs rhs{&spec, &piece};
  LogJac jac{&spec, &piece};
  ode::rosenbrock4<double> ros;
  vec2 x(3);
  x[0] = mf.log_psi[i];
  x[1] = mf.p[i];
  for (; i + 1 < N; ++i) {
    auto cuts = pieces(grid.r[i], grid.r[i + 1], kinks);
    for (std::size_t k = 0; k + 1 < cuts.size(); ++k) {
      piece = {cuts[k], cuts[k + 1]};
      x[2] = cuts[k];
      ros.do_step(std::make_pair(rhs, jac), x, cuts[k], cuts[k + 1] - cuts[k]);
    }
    mf.log_psi[i + 1] = x[0];
    mf.p[i + 1] = x[1];
  }
  return mf;
}

double ModelFunction::psi(std::size_t i) const {
  if (i == 0) return 0.0;
  double v = std::exp(log_psi[i]);
  if (!std::isfinite(v)) throw OverflowAtRadius(r_safe());
  return v;
}

double ModelFunction::dpsi(std::size_t i) const {
  if (i == 0) return 1.0;
  double v = std::exp(log_psi[i] + std::log(p[i]));
  if (!std::isfinite(v)) throw OverflowAtRadius(r_safe());
  return v;
}

double ModelFunction::r_safe() const {
  const double lim = std::log(std::numeric_limits<double>::max());
  double rs = 0.0;
  for (std::size_t i = 1; i < size(); ++i) {
    if (log_psi[i] + std::log(p[i]) >= lim) break;
    rs = grid.r[i];
  }
  return rs;
}

double ModelFunction::log_psi_at(double x, std::size_t j) const {
  const auto& r = grid.r;
  if (x <= 0.0) return -kInf;
  if (spec.variant == Variant::Flat) return std::log(x);
  if (j == 0) {
    // psi itself is smooth through the origin
    double p1 = std::exp(log_psi[1]);
    double d1 = p1 * p[1];
    return std::log(hermite(0.0, r[1], 0.0, p1, 1.0, d1, x));
  }
  return hermite(r[j], r[j + 1], log_psi[j], log_psi[j + 1], p[j], p[j + 1], x);
}

double ModelFunction::log_psi_at(double x) const {
  std::size_t j = std::min(grid.locate(x), size() - 2);
  return log_psi_at(x, j);
}

double ModelFunction::p_at(double x) const {
  const auto& r = grid.r;
  std::size_t j = std::min(grid.locate(x), size() - 2);
  if (x <= 0.0) return kInf;
  if (spec.variant == Variant::Flat) return 1.0 / x;
  if (j == 0) {
    double p1 = std::exp(log_psi[1]);
    double d1 = p1 * p[1];
    double ps = hermite(0.0, r[1], 0.0, p1, 1.0, d1, x);
    double ds = hermite_slope(0.0, r[1], 0.0, p1, 1.0, d1, x);
    return ds / ps;
  }
  return hermite_slope(r[j], r[j + 1], log_psi[j], log_psi[j + 1], p[j], p[j + 1], x);
}

DriftField drift_coefficient(const ModelFunction& mf) {
  DriftField d;
  d.value.r = mf.grid.r;
  d.value.f.resize(mf.size());
  d.value.f[0] = kNaN;
  for (std::size_t i = 1; i < mf.size(); ++i) d.value.f[i] = (mf.spec.n - 1) * mf.p[i];
  d.origin_singular = true;
  return d;
}

RadialField curvature_of(const ModelFunction& mf) {
  RadialField k(mf.grid.r, mf.w);
  for (double& v : k.f) v = -v;
  return k;
}

RatioEstimate asymptotic_ratio(const ModelFunction& mf, double lo, double hi) {
  const bool flat = mf.spec.variant == Variant::Flat;
  if (!(hi > lo) || hi > mf.grid.L * (1 + 1e-12) || (!flat && lo <= mf.spec.R))
    throw WindowOutsideDomain("ratio window must lie inside (R, L]");
  double sum = 0.0, dev = 0.0;
  std::size_t cnt = 0;
  const double target = std::sqrt(mf.spec.Q);
  for (std::size_t i = 1; i < mf.size(); ++i) {
    double r = mf.r(i);
    if (r < lo || r > hi) continue;
    double q = mf.p[i] / std::pow(r, mf.spec.mu);
    sum += q;
    dev = std::max(dev, std::abs(q - target));
    ++cnt;
  }
  if (cnt == 0) throw WindowOutsideDomain("no grid nodes inside the ratio window");
  return {sum / double(cnt), dev};
}

void write_model_csv(const std::string& path, const ModelFunction& mf) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  out << "r,psi,dpsi,w\n";
  char buf[128];
  const double rs = mf.r_safe();
  for (std::size_t i = 0; i < mf.size() && (i == 0 || mf.r(i) <= rs); ++i) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g", mf.r(i), mf.psi(i),
                  mf.dpsi(i), mf.w[i]);
    out << buf << "\n";
  }
}

}  // namespace pmelab
