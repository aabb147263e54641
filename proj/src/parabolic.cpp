#include "pmelab/parabolic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>

#include <boost/math/tools/toms748_solve.hpp>

#include "json.hpp"
#include "pmelab/errors.hpp"
#include "pmelab/quadrature.hpp"

namespace pmelab {

namespace {

// finite volumes around each node in the measure psi^{n-1} dr; the equation is divided by
// the cell volume so only ratios are stored
struct Operator {
  std::vector<double> up, down;  // T_{i+1/2}/V_i, T_{i-1/2}/V_i
  std::vector<double> logV;
};

Operator build_operator(const ModelFunction& mf) {
  const std::size_t N = mf.size() - 1;  // node N carries the Dirichlet value
  const int n = mf.spec.n;
  const auto& r = mf.grid.r;
  // face i+1/2: 1/int psi^{1-n} over the interval, except the first one where that
  // integral diverges and the two-point flux is used
  std::vector<double> logT(N);
  logT[0] = (n - 1) * mf.log_psi_at(0.5 * r[1]) - std::log(r[1]);
  for (std::size_t i = 1; i < N; ++i)
    logT[i] = -log_int_psi_pow(mf, 1.0 - n, r[i], r[i + 1]);
  // face i+1/2 sits where psi^{n-1} equals the harmonic mean over the interval, which is
  // the point whose flux the transmissibility returns when the flux scales like psi^{n-1}
  std::vector<double> face(N);
  face[0] = 0.5 * r[1];
  for (std::size_t i = 1; i < N; ++i) {
    const double target = (logT[i] + std::log(r[i + 1] - r[i])) / (n - 1);
    auto f = [&](double x) { return mf.log_psi_at(x, i) - target; };
    face[i] = 0.5 * (r[i] + r[i + 1]);
    if (f(r[i]) < 0.0 && f(r[i + 1]) > 0.0) {
      boost::uintmax_t it = 100;
      auto b = boost::math::tools::toms748_solve(f, r[i], r[i + 1],
                                                 boost::math::tools::eps_tolerance<double>(40), it);
      face[i] = 0.5 * (b.first + b.second);
    }
  }
  Operator op;
  op.up.resize(N);
  op.down.resize(N);
  op.logV.resize(N);
  for (std::size_t i = 0; i < N; ++i) {
    op.logV[i] = log_int_psi_pow(mf, n - 1.0, i == 0 ? 0.0 : face[i - 1], face[i]);
    op.up[i] = std::exp(logT[i] - op.logV[i]);
    op.down[i] = i == 0 ? 0.0 : std::exp(logT[i - 1] - op.logV[i]);
  }
  return op;
}

double mass_of(const Operator& op, const std::vector<double>& u) {
  double s = 0.0;
  for (std::size_t i = 0; i < op.logV.size(); ++i)
    if (u[i] > 0.0) s += std::exp(op.logV[i] + std::log(u[i]));
  return s;
}

// one implicit Euler step; false if Newton did not settle
bool implicit_step(const Operator& op, double m, double dt, const std::vector<double>& old,
                   std::vector<double>& u, const Stepping& st, int& iters) {
  const std::size_t N = old.size();
  std::vector<double> w(N + 1, 0.0), dw(N + 1, 0.0);
  std::vector<double> lo(N), di(N), hi(N), rhs(N), c(N);
  u = old;
  double scale = 0.0;
  for (double x : old) scale = std::max(scale, x);
  if (scale == 0.0) return true;
  for (int it = 0; it < st.newton_max; ++it) {
    ++iters;
    for (std::size_t i = 0; i < N; ++i) {
      w[i] = std::pow(u[i], m);
      dw[i] = m * std::pow(u[i], m - 1.0);
    }
    for (std::size_t i = 0; i < N; ++i) {
      const double flux = op.up[i] * (w[i + 1] - w[i]) -
                          (i > 0 ? op.down[i] * (w[i] - w[i - 1]) : 0.0);
      rhs[i] = -(u[i] - old[i] - dt * flux);
      di[i] = 1.0 + dt * (op.up[i] + op.down[i]) * dw[i];
      hi[i] = i + 1 < N ? -dt * op.up[i] * dw[i + 1] : 0.0;
      lo[i] = i > 0 ? -dt * op.down[i] * dw[i - 1] : 0.0;
    }
    // Thomas
    c[0] = hi[0] / di[0];
    rhs[0] /= di[0];
    for (std::size_t i = 1; i < N; ++i) {
      const double den = di[i] - lo[i] * c[i - 1];
      c[i] = hi[i] / den;
      rhs[i] = (rhs[i] - lo[i] * rhs[i - 1]) / den;
    }
    for (std::size_t i = N - 1; i-- > 0;) rhs[i] -= c[i] * rhs[i + 1];
    double step = 0.0;
    for (std::size_t i = 0; i < N; ++i) {
      const double next = std::max(u[i] + rhs[i], 0.0);
      step = std::max(step, std::abs(next - u[i]));
      u[i] = next;
    }
    if (!std::isfinite(step)) return false;
    if (step <= st.newton_tol * scale) return true;
  }
  return false;
}

}  // namespace

double support_radius(const RadialField& field, double eps) {
  for (std::size_t i = field.size(); i-- > 0;) {
    if (field[i] > eps) {
      if (i + 1 == field.size()) return field.r[i];
      const double a = field[i], b = field[i + 1];
      return field.r[i] + (a - eps) / (a - b) * (field.r[i + 1] - field.r[i]);
    }
  }
  return 0.0;
}

std::vector<double> log_spaced_times(double t_lo, double t_hi, int per_decade) {
  if (!(t_lo > 0.0) || !(t_hi >= t_lo) || per_decade < 1)
    throw InvalidArgument("log_spaced_times needs 0 < t_lo <= t_hi and per_decade >= 1");
  std::vector<double> out;
  const double d = std::log10(t_hi / t_lo);
  const int K = static_cast<int>(std::round(d * per_decade));
  for (int k = 0; k <= K; ++k) out.push_back(t_lo * std::pow(10.0, double(k) / per_decade));
  out.back() = t_hi;
  return out;
}

FlowResult run_flow(const FlowConfig& cfg) {
  if (!(cfg.m > 1.0)) throw InvalidArgument("m must exceed 1");
  if (!(cfg.t_end > 0.0)) throw InvalidArgument("t_end must be positive");
  require_same_nodes(cfg.u0.r, cfg.mf.grid.r, "initial datum");
  const std::size_t N = cfg.mf.size() - 1;
  for (std::size_t i = 0; i <= N; ++i)
    if (!(cfg.u0[i] >= 0.0) || !std::isfinite(cfg.u0[i]))
      throw InvalidArgument("initial datum must be finite and nonnegative");
  if (cfg.u0[N] != 0.0) throw InvalidArgument("initial datum must vanish at r = L");

  FlowResult res;
  res.mf = cfg.mf;
  res.m = cfg.m;
  res.u0_sup = cfg.u0.sup();
  res.eps_supp = cfg.eps_supp;

  std::vector<double> times = cfg.snapshots;
  std::sort(times.begin(), times.end());
  times.erase(std::unique(times.begin(), times.end()), times.end());
  for (double t : times)
    if (t < 0.0 || t > cfg.t_end) throw InvalidArgument("snapshot time outside [0, t_end]");

  const Operator op = build_operator(cfg.mf);
  const Stepping& st = cfg.stepping;
  std::vector<double> u(cfg.u0.f.begin(), cfg.u0.f.begin() + N), next;
  const double mass0 = mass_of(op, u);
  double mass_prev = mass0, t_prev_mass = 0.0;

  auto record = [&](double t) {
    std::vector<double> f(u);
    f.push_back(0.0);
    RadialField field(cfg.mf.grid.r, std::move(f));
    const double sup = field.sup();
    const double eps = res.eps_supp > 0.0 ? res.eps_supp : 1e-10 * sup;
    res.series.push_back({t, sup, sup > 0.0 ? support_radius(field, eps) : 0.0, mass_of(op, u)});
    res.snapshots.push_back({t, std::move(field)});
  };

  std::size_t k = 0;
  double t = 0.0, dt = st.dt_init;
  if (k < times.size() && times[k] == 0.0) {
    record(0.0);
    ++k;
  }
  auto& dg = res.diagnostics;
  while (t < cfg.t_end) {
    const double cap = std::max(st.dt_init, st.dt_ratio * t);
    dt = std::min(dt, cap);
    double target = cfg.t_end;
    if (k < times.size()) target = std::min(target, times[k]);
    double h = dt;
    const bool lands = t + h >= target * (1.0 - 1e-12);
    if (lands) h = target - t;
    int iters = 0;
    if (!implicit_step(op, cfg.m, h, u, next, st, iters)) {
      dg.newton_iterations += iters;
      ++dg.newton_halvings;
      dt = 0.5 * std::min(dt, h);
      if (dt < st.dt_min) throw StepUnderflow("time step underflow", t);
      continue;
    }
    dg.newton_iterations += iters;
    ++dg.steps;
    dg.outer_wm_integral += h * std::pow(next[N - 1], cfg.m);
    u.swap(next);
    t = lands ? target : t + h;
    if (iters <= st.newton_fast && !lands) dt = std::min(2.0 * dt, std::max(st.dt_init, st.dt_ratio * t));
    while (k < times.size() && times[k] <= t * (1.0 + 1e-12)) {
      record(times[k]);
      const double mass = res.series.back().mass;
      if (!std::isfinite(mass) || !std::isfinite(mass0))
        dg.max_mass_drift_rate = std::nan("");
      else if (t > t_prev_mass && mass0 > 0.0)
        dg.max_mass_drift_rate = std::max(
            dg.max_mass_drift_rate, std::abs(mass - mass_prev) / mass0 / (t - t_prev_mass));
      mass_prev = mass;
      t_prev_mass = t;
      ++k;
    }
  }
  dg.benilan_crandall_min_slack = benilan_crandall_check(res);
  dg.rescaled_monotonicity_min_slack = rescaled_monotonicity_check(res);
  return res;
}

RescaledProfile rescaled_profile(const FlowResult& res, double t) {
  if (res.snapshots.empty() || !(t >= 1.0) || t < res.snapshots.front().t ||
      t > res.snapshots.back().t)
    throw TimeOutsideRange("rescaled profile needs t >= 1 inside the snapshot range");
  const double q = 1.0 / (res.m - 1.0);
  std::size_t j = 0;
  while (j + 1 < res.snapshots.size() && res.snapshots[j + 1].t <= t) ++j;
  const auto& a = res.snapshots[j];
  RescaledProfile out;
  out.tau = std::log(t);
  out.U = a.u;
  if (a.t == t) {
    const double s = std::pow(t, q);
    for (auto& x : out.U.f) x *= s;
    return out;
  }
  // linear in log t between neighbouring rescaled snapshots
  const auto& b = res.snapshots[j + 1];
  const double th = (std::log(t) - std::log(a.t)) / (std::log(b.t) - std::log(a.t));
  const double sa = std::pow(a.t, q), sb = std::pow(b.t, q);
  for (std::size_t i = 0; i < out.U.size(); ++i)
    out.U[i] = (1.0 - th) * sa * a.u[i] + th * sb * b.u[i];
  return out;
}

double benilan_crandall_check(const std::vector<Snapshot>& snaps, double m) {
  const double q = 1.0 / (m - 1.0);
  double worst = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k + 1 < snaps.size(); ++k) {
    const auto& a = snaps[k];
    const auto& b = snaps[k + 1];
    if (!(a.t > 0.0)) continue;
    const double f = std::pow(a.t / b.t, q);
    for (std::size_t i = 0; i < a.u.size(); ++i)
      worst = std::min(worst, (b.u[i] - f * a.u[i]) / (b.t - a.t));
  }
  return worst;
}

double benilan_crandall_check(const FlowResult& res) {
  return benilan_crandall_check(res.snapshots, res.m);
}

double rescaled_monotonicity_check(const FlowResult& res, double t_min) {
  const double q = 1.0 / (res.m - 1.0);
  double worst = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k + 1 < res.snapshots.size(); ++k) {
    const auto& a = res.snapshots[k];
    const auto& b = res.snapshots[k + 1];
    if (!(a.t > 0.0) || a.t < t_min) continue;
    const double sa = std::pow(a.t, q), sb = std::pow(b.t, q);
    for (std::size_t i = 0; i < a.u.size(); ++i)
      worst = std::min(worst, sb * b.u[i] - sa * a.u[i]);
  }
  return worst;
}

std::vector<std::pair<double, double>> convergence_metric(const FlowResult& res,
                                                          const EllipticSolution& v) {
  require_same_nodes(v.v.r, res.mf.grid.r, "convergence metric");
  const double q = 1.0 / (res.m - 1.0);
  std::vector<std::pair<double, double>> out;
  for (const auto& s : res.snapshots) {
    if (!(s.t > 0.0)) continue;
    const double f = std::pow(s.t, q);
    double e = 0.0;
    for (std::size_t i = 0; i < s.u.size(); ++i) e = std::max(e, std::abs(f * s.u[i] - v.v[i]));
    out.emplace_back(s.t, e);
  }
  return out;
}

double measured_shift(const RadialField& u0, const RadialField& v, double m) {
  require_same_nodes(u0.r, v.r, "measured shift");
  double ratio = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < u0.size(); ++i)
    if (u0[i] > 0.0) ratio = std::min(ratio, v[i] / u0[i]);
  if (!(ratio > 0.0)) throw InvalidArgument("v vanishes on the support of u0");
  if (!std::isfinite(ratio)) return 0.0;
  return std::pow(ratio, m - 1.0);
}

double universal_bound_check(const FlowResult& res, const EllipticSolution& v, double t0) {
  require_same_nodes(v.v.r, res.mf.grid.r, "universal bound");
  const double q = 1.0 / (res.m - 1.0);
  double worst = 0.0;
  for (const auto& s : res.snapshots) {
    if (s.t + t0 <= 0.0) continue;
    const double f = std::pow(s.t + t0, -q);
    for (std::size_t i = 0; i < s.u.size(); ++i)
      worst = std::max(worst, s.u[i] - v.v[i] * f);
  }
  return worst;
}

double absolute_bound_excess(const FlowResult& res, const EllipticSolution& v, double t_min) {
  const double q = 1.0 / (res.m - 1.0);
  const double vmax = v.v.sup();
  double worst = -std::numeric_limits<double>::infinity();
  for (const auto& p : res.series)
    if (p.t >= t_min && p.t > 0.0) worst = std::max(worst, p.sup_norm * std::pow(p.t, q) - vmax);
  return worst;
}

std::vector<std::pair<double, double>> volume_lower_bound_check(const FlowResult& res) {
  const double q = 1.0 / (res.m - 1.0);
  std::vector<std::pair<double, double>> out;
  for (const auto& p : res.series) {
    if (!(p.t > 0.0)) continue;
    double V = 0.0;
    if (p.support_radius > 0.0)
      V = std::exp(log_int_psi_pow(res.mf, res.mf.spec.n - 1.0, 0.0, p.support_radius));
    out.emplace_back(p.t, V * std::pow(p.t, -q));
  }
  return out;
}

double log_log_slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw InvalidArgument("slope needs two points");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double n = static_cast<double>(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double a = std::log(x[i]), b = std::log(y[i]);
    sx += a;
    sy += b;
    sxx += a * a;
    sxy += a * b;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

void write_snapshot_csvs(const std::string& dir, const FlowResult& res) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir);
  char name[64];
  for (std::size_t k = 0; k < res.snapshots.size(); ++k) {
    std::snprintf(name, sizeof name, "/snapshot_%03zu.csv", k);
    write_field_csv(dir + name, res.snapshots[k].u, "r,u");
  }
}

void write_series_csv(const std::string& path, const FlowResult& res) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  out << "t,sup_norm,support_radius,mass\n";
  char buf[128];
  for (const auto& p : res.series) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g", p.t, p.sup_norm,
                  p.support_radius, p.mass);
    out << buf << "\n";
  }
}

std::string diagnostics_to_json(const FlowResult& res) {
  const auto& d = res.diagnostics;
  nlohmann::ordered_json j;
  j["benilan_crandall_min_slack"] = d.benilan_crandall_min_slack;
  j["rescaled_monotonicity_min_slack"] = d.rescaled_monotonicity_min_slack;
  j["max_mass_drift_rate"] = d.max_mass_drift_rate;
  j["outer_wm_integral"] = d.outer_wm_integral;
  j["steps"] = d.steps;
  j["newton_iterations"] = d.newton_iterations;
  j["newton_halvings"] = d.newton_halvings;
  j["eps_supp"] = res.eps_supp;
  j["snapshots"] = res.snapshots.size();
  return j.dump(2);
}

}  // namespace pmelab
