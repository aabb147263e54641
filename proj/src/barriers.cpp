#include "pmelab/barriers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "json.hpp"
#include "pmelab/errors.hpp"

namespace pmelab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr std::size_t kWitnesses = 5;

// keeps the few smallest margins
class Tracker {
 public:
  void add(double r, double t, double margin, const char* what) {
    if (std::isnan(margin)) margin = -kInf;
    w_.push_back({r, t, margin, what});
    std::sort(w_.begin(), w_.end(),
              [](const Witness& a, const Witness& b) { return a.margin < b.margin; });
    if (w_.size() > kWitnesses) w_.pop_back();
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

double drift_at(const ModelFunction& mf, std::size_t i) {
  return (mf.spec.n - 1) * mf.p[i];
}

void check_exponents(double m, double mu) {
  if (!(m > 1.0)) throw InvalidArgument("m must exceed 1");
  if (!(mu > 1.0)) throw InvalidArgument("mu must exceed 1");
}

// v/(m-1) + (v^m)'' + drift (v^m)' over the sum of the term sizes, sign chosen so that
// >= 0 is the wanted direction
double elliptic_direct(const EllipticBarrierParams& p, double r, double drift) {
  const double m = p.m, mu = p.mu, q = 1.0 / (m - 1.0);
  const double P = r * r + p.r0 * p.r0;
  double v, wr, wrr;
  if (p.kind == EllipticKind::Super) {
    const double e = m * (mu - 1.0) / (2.0 * (m - 1.0));
    const double Cm = std::pow(p.C, m);
    v = p.C * std::pow(P, -(mu - 1.0) * q / 2.0);
    wr = -Cm * 2.0 * e * r * std::pow(P, -e - 1.0);
    wrr = -Cm * 2.0 * e * std::pow(P, -e - 1.0) * (1.0 - 2.0 * (e + 1.0) * r * r / P);
  } else {
    const double B = std::pow(P, -(mu - 1.0) / 2.0) - p.delta;
    if (B <= 0.0) return kInf;
    const double Br = -(mu - 1.0) * r * std::pow(P, -(mu + 1.0) / 2.0);
    const double Brr = -(mu - 1.0) * (std::pow(P, -(mu + 1.0) / 2.0) -
                                      (mu + 1.0) * r * r * std::pow(P, -(mu + 3.0) / 2.0));
    const double Cm = std::pow(p.C, m);
    v = p.C * std::pow(B, q);
    wr = Cm * (q + 1.0) * std::pow(B, q) * Br;
    wrr = Cm * (q + 1.0) * (q * std::pow(B, q - 1.0) * Br * Br + std::pow(B, q) * Brr);
  }
  const double t1 = v / (m - 1.0), t3 = drift * wr;
  const double res = t1 + wrr + t3;
  const double scale = std::abs(t1) + std::abs(wrr) + std::abs(t3);
  // super: -Delta v^m >= v/(m-1) means res <= 0
  return (p.kind == EllipticKind::Super ? -res : res) / scale;
}

}  // namespace

double sub_constant(double m, double mu, int n, double Q, double eps) {
  check_exponents(m, mu);
  return std::pow(m * (mu - 1.0) * (n - 1) * std::sqrt(Q + eps), -1.0 / (m - 1.0));
}

EllipticBarrierParams make_sub(double m, double mu, int n, double Q, double eps, double delta,
                               double r0) {
  if (!(eps >= 0.0) || !(delta >= 0.0) || !(r0 > 0.0))
    throw InvalidArgument("sub barrier needs eps, delta >= 0 and r0 > 0");
  EllipticBarrierParams p;
  p.kind = EllipticKind::Sub;
  p.m = m;
  p.mu = mu;
  p.n = n;
  p.Q = Q;
  p.eps = eps;
  p.delta = delta;
  p.r0 = r0;
  p.C = sub_constant(m, mu, n, Q, eps);
  return p;
}

std::string to_json(const FeasibilityReport& rep) {
  nlohmann::json j;
  j["satisfied"] = rep.satisfied;
  j["worst_margin"] = rep.worst_margin;
  j["witnesses"] = nlohmann::json::array();
  for (const auto& w : rep.witnesses)
    j["witnesses"].push_back({{"r", w.r}, {"t", w.t}, {"margin", w.margin}, {"check", w.what}});
  return j.dump(2);
}

RadialField eval_elliptic_barrier(const EllipticBarrierParams& p, const RadialGrid& grid) {
  RadialField out(grid, 0.0);
  const double q = 1.0 / (p.m - 1.0);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double P = grid.r[i] * grid.r[i] + p.r0 * p.r0;
    if (p.kind == EllipticKind::Super) {
      out[i] = p.C * std::pow(P, -(p.mu - 1.0) * q / 2.0);
    } else {
      const double B = std::pow(P, -(p.mu - 1.0) / 2.0) - p.delta;
      out[i] = B > 0.0 ? p.C * std::pow(B, q) : 0.0;
    }
  }
  return out;
}

double drift_beta(const ModelFunction& mf) {
  double lo = kInf;
  for (std::size_t i = 0; i < mf.size(); ++i)
    if (mf.r(i) >= 1.0) lo = std::min(lo, drift_at(mf, i) / std::pow(mf.r(i), mf.spec.mu));
  if (!(lo < kInf)) throw InvalidArgument("grid has no nodes beyond r = 1");
  return 0.95 * lo;
}

double drift_beta_hat(const ModelFunction& mf) {
  double hi = 0.0;
  bool any = false;
  for (std::size_t i = 0; i < mf.size(); ++i)
    if (mf.r(i) >= 1.0) {
      hi = std::max(hi, drift_at(mf, i) / std::pow(mf.r(i), mf.spec.mu));
      any = true;
    }
  if (!any) throw InvalidArgument("grid has no nodes beyond r = 1");
  return 1.05 * hi;
}

SubDriftConstants sub_drift_constants(const ModelFunction& mf, double eps) {
  const double c = (mf.spec.n - 1) * std::sqrt(mf.spec.Q + eps);
  // scan from the outside in for the last node where the bound fails
  std::size_t k = mf.size();
  for (std::size_t i = mf.size(); i-- > 1;) {
    if (drift_at(mf, i) > c * std::pow(mf.r(i), mf.spec.mu)) break;
    k = i;
  }
  if (k == mf.size()) throw InvalidArgument("drift never falls below the far-field bound");
  SubDriftConstants out;
  out.R_low = mf.r(k);
  out.alpha = mf.spec.n - 1.0;  // r * drift -> n-1 at the origin
  for (std::size_t i = 1; i < k; ++i) out.alpha = std::max(out.alpha, mf.r(i) * drift_at(mf, i));
  return out;
}

FeasibilityReport check_elliptic_feasibility(const EllipticBarrierParams& p,
                                             const ModelFunction& mf) {
  check_exponents(p.m, p.mu);
  const double m = p.m, mu = p.mu, Cm1 = std::pow(p.C, m - 1.0);
  const double k = (m * (mu + 1.0) - 2.0) / (m - 1.0);
  const double r02 = p.r0 * p.r0;
  Tracker tr;
  if (p.kind == EllipticKind::Super) {
    const double beta = drift_beta(mf);
    const double rhs1 = std::pow(1.0 + r02, (mu + 1.0) / 2.0) / (m * (mu - 1.0));
    tr.add(1.0, 0.0, (Cm1 * (mf.spec.n - k / (1.0 + r02)) - rhs1) / rhs1, "inner closed form");
    tr.add(1.0, 0.0, (Cm1 * (beta - k / (1.0 + r02)) - rhs1) / rhs1, "outer closed form");
    for (std::size_t i = 1; i < mf.size(); ++i) {
      const double r = mf.r(i), P = r * r + r02;
      if (r < 1.0) {
        const double rhs = std::pow(P, (mu + 1.0) / 2.0) / (m * (mu - 1.0));
        tr.add(r, 0.0, (Cm1 * (mf.spec.n - k * r * r / P) - rhs) / rhs, "inner pointwise");
      } else {
        const double rhs =
            std::pow(P, (mu + 1.0) / 2.0) / (m * (mu - 1.0) * std::pow(r, mu + 1.0));
        tr.add(r, 0.0, (Cm1 * (beta - k / (std::pow(r, mu - 1.0) * P)) - rhs) / rhs,
               "outer pointwise");
      }
    }
  } else {
    const auto dc = sub_drift_constants(mf, p.eps);
    const double c = (mf.spec.n - 1) * std::sqrt(mf.spec.Q + p.eps);
    const double rhs2 = std::pow(p.r0, mu + 1.0) / (m * (mu - 1.0));
    tr.add(dc.R_low, 0.0, (rhs2 - Cm1 * (dc.alpha + 1.0)) / rhs2, "inner bound");
    const double need = 1.0 / (c * std::pow(dc.R_low, mu - 1.0));
    tr.add(dc.R_low, 0.0, (r02 - need) / need, "r0 bound");
  }
  // direct residual, leaving out a thin shell at the support edge of Sub
  const double edge = p.kind == EllipticKind::Sub && p.delta > 0.0
                          ? std::sqrt(std::max(0.0, std::pow(p.delta, -2.0 / (mu - 1.0)) - r02))
                          : kInf;
  for (std::size_t i = 1; i < mf.size(); ++i) {
    const double r = mf.r(i);
    if (std::abs(r - edge) <= 1e-3 * edge || r > edge) continue;
    tr.add(r, 0.0, elliptic_direct(p, r, drift_at(mf, i)), "direct");
  }
  return tr.report();
}

EllipticBarrierParams find_elliptic_super(const ModelFunction& mf, double m) {
  const double mu = mf.spec.mu;
  check_exponents(m, mu);
  const double beta = drift_beta(mf);
  const double k = (m * (mu + 1.0) - 2.0) / (m - 1.0);
  EllipticBarrierParams p;
  p.kind = EllipticKind::Super;
  p.m = m;
  p.mu = mu;
  p.n = mf.spec.n;
  p.Q = mf.spec.Q;
  for (double r0 = 0.25; r0 <= 1e3; r0 *= 1.05) {
    const double a = 1.0 + r0 * r0;
    const double lhs = std::min(mf.spec.n - k / a, beta - k / a);
    if (lhs <= 0.0) continue;
    const double Cm1 = std::pow(a, (mu + 1.0) / 2.0) / (m * (mu - 1.0) * lhs);
    p.r0 = r0;
    p.C = std::pow(Cm1 * (1.0 + 1e-6), 1.0 / (m - 1.0));
    if (check_elliptic_feasibility(p, mf).satisfied) return p;
  }
  throw NoFeasibleParams("no supersolution radius found up to r0 = 1e3");
}

EllipticBarrierParams find_elliptic_sub(const ModelFunction& mf, double m, double eps,
                                        double delta) {
  for (double r0 = 0.1; r0 <= 1e3; r0 *= 1.02) {
    auto p = make_sub(m, mf.spec.mu, mf.spec.n, mf.spec.Q, eps, delta, r0);
    if (check_elliptic_feasibility(p, mf).satisfied) return p;
  }
  throw NoFeasibleParams("no subsolution radius found up to r0 = 1e3");
}

std::string to_json(const BarrierParams& p) {
  nlohmann::json j;
  j["kind"] = p.kind == ParabolicKind::Upper ? "upper" : "lower";
  j["C"] = p.C;
  j["gamma"] = p.gamma;
  j["r0"] = p.r0;
  j["t0"] = p.t0;
  j["m"] = p.m;
  j["mu"] = p.mu;
  j["beta"] = p.beta;
  j["k1"] = p.k1;
  j["k2"] = p.k2;
  return j.dump(2);
}

double eval_parabolic_barrier(const BarrierParams& p, double r, double t) {
  const double T = t + p.t0;
  const double B = std::pow(r + p.r0, 1.0 - p.mu) -
                   p.gamma * std::pow(std::log(T), -(p.mu - 1.0) / (p.mu + 1.0));
  if (!(B > 0.0)) return 0.0;
  const double q = 1.0 / (p.m - 1.0);
  return p.C * std::pow(T, -q) * std::pow(B, q);
}

double barrier_front(const BarrierParams& p, double t) {
  return std::pow(p.gamma, -1.0 / (p.mu - 1.0)) *
             std::pow(std::log(t + p.t0), 1.0 / (p.mu + 1.0)) -
         p.r0;
}

BarrierParams find_upper_params(const UpperInputs& in) {
  const double m = in.m, mu = in.mu;
  check_exponents(m, mu);
  if (!(in.beta > 0.0) || !(in.M >= 0.0) || !(in.tau > 0.0) || in.u0.size() == 0)
    throw InvalidArgument("upper search needs beta > 0, M >= 0, tau > 0 and a datum");
  BarrierParams p;
  p.kind = ParabolicKind::Upper;
  p.m = m;
  p.mu = mu;
  p.beta = in.beta;

  // r0: the left extremum of the outer region is where the chain is decreasing
  p.r0 = std::max(1.0, 1.01 * (4.0 * mu / (m - 1.0) + mu) / in.beta - 1.0);
  const double x0 = 1.0 + p.r0;
  const double kappa = in.beta / std::pow(x0, mu) - mu / std::pow(x0, mu + 1.0);
  p.k1 = (m - 1.0) * kappa / (2.0 * (mu - 1.0));
  p.k2 = (m - 1.0) / (m * (mu - 1.0) * (mu + 1.0));

  const double a = (mu - 1.0) / (mu + 1.0);
  const double Cm1_outer = 2.0 / (m * (mu - 1.0) * kappa);

  // C and gamma for a given t0
  auto fit = [&](double t0) {
    BarrierParams q = p;
    q.t0 = t0;
    const double gamma_inner = std::pow(std::log(t0), a) / (2.0 * std::pow(x0, mu - 1.0));
    auto gamma_of = [&](double Cm1) {
      return 0.99 * std::min(std::pow(q.k2 / Cm1, a), gamma_inner);
    };
    auto covers = [&](double Cm1) {
      BarrierParams c = q;
      c.C = std::pow(Cm1, 1.0 / (m - 1.0));
      c.gamma = gamma_of(Cm1);
      for (std::size_t i = 0; i < in.u0.size(); ++i)
        if (in.u0[i] > 0.0 && eval_parabolic_barrier(c, in.u0.r[i], 0.0) < in.u0[i])
          return false;
      return true;
    };
    const double Cm1_lo = 1.01 * std::max(Cm1_outer, 2.0 * std::pow(x0, mu - 1.0) *
                                                         (t0 / in.tau) *
                                                         std::pow(in.M, m - 1.0));
    double lo = Cm1_lo, hi = Cm1_lo;
    if (!covers(hi)) {
      int k = 0;
      while (!covers(hi)) {
        lo = hi;
        hi *= 2.0;
        if (++k > 200) throw NoFeasibleParams("initial datum not covered by any upper barrier");
      }
      for (int it = 0; it < 60; ++it) {
        const double mid = std::sqrt(lo * hi);
        (covers(mid) ? hi : lo) = mid;
      }
    }
    q.C = std::pow(hi, 1.0 / (m - 1.0));
    q.gamma = gamma_of(hi);
    return q;
  };

  // t0 last: the one giving the smallest front at t_ref
  BarrierParams best = fit(std::max(in.tau, std::exp(1.0)));
  for (double t0 = best.t0 * 1.25; t0 <= 1e6; t0 *= 1.25) {
    auto q = fit(t0);
    if (barrier_front(q, in.t_ref) < barrier_front(best, in.t_ref)) best = q;
  }
  return best;
}

BarrierParams find_lower_params(const LowerInputs& in) {
  const double m = in.m, mu = in.mu;
  check_exponents(m, mu);
  if (!(in.beta_hat > 0.0) || !(in.I > 0.0) || !(in.T >= 0.0))
    throw InvalidArgument("lower search needs beta_hat > 0, I > 0 and T >= 0");
  const double a = (mu - 1.0) / (mu + 1.0);
  BarrierParams best;
  best.kind = ParabolicKind::Lower;
  best.m = m;
  best.mu = mu;
  best.beta = in.beta_hat;
  best.k1 = 2.0 * (mu - 1.0) / (mu + 1.0);
  best.k2 = 2.0 * m * (mu - 1.0) * (mu - 1.0) / (m - 1.0);
  best.t0 = 1.01;
  const double Cm1_max = 1.0 / (2.0 * m * in.beta_hat * (mu - 1.0));
  double best_front = -kInf;
  bool found = false;
  for (double r0 = 1.0; r0 <= 100.0; r0 *= 1.02) {
    BarrierParams p = best;
    p.r0 = r0;
    const double Cm1 =
        0.99 * std::min(Cm1_max, std::pow(in.I * std::pow(r0, (mu - 1.0) / (m - 1.0)), m - 1.0));
    p.C = std::pow(Cm1, 1.0 / (m - 1.0));
    p.gamma = 1.01 * std::max(std::pow(p.k1 / (Cm1 * p.k2), (mu - 1.0) / (mu + 1.0)),
                              std::pow(std::log(in.T + p.t0), a) / std::pow(r0, mu - 1.0));
    const double f = barrier_front(p, in.t_ref);
    if (f > best_front) {
      best_front = f;
      best = p;
      found = true;
    }
  }
  if (!found) throw NoFeasibleParams("no lower barrier radius");
  return best;
}

FeasibilityReport verify_differential_inequality(const BarrierParams& p, const ModelFunction& mf,
                                                 const Region& region) {
  check_exponents(p.m, p.mu);
  const double m = p.m, mu = p.mu, q = 1.0 / (m - 1.0);
  const double a = (mu - 1.0) / (mu + 1.0);
  const double r_hi = region.r_hi > 0.0 ? region.r_hi : mf.grid.L;
  const double sign = p.kind == ParabolicKind::Upper ? 1.0 : -1.0;
  Tracker tr;
  bool any = false;
  for (double t : region.times) {
    const double T = t + p.t0, ell = std::log(T);
    const double S = p.gamma * std::pow(ell, -a);
    const double X_front = std::pow(S, -1.0 / (mu - 1.0));
    for (std::size_t i = 1; i < mf.size(); ++i) {
      const double r = mf.r(i);
      if (r < region.r_lo || r > r_hi) continue;
      const double X = r + p.r0;
      if (std::abs(X - X_front) <= region.shell * X_front) continue;
      any = true;
      if (X > X_front) continue;  // zero there
      const double B = std::pow(X, 1.0 - mu) - S;
      const double Bt = p.gamma * a * std::pow(ell, -a - 1.0) / T;
      const double Br = -(mu - 1.0) * std::pow(X, -mu);
      const double Brr = mu * (mu - 1.0) * std::pow(X, -mu - 1.0);
      const double ut1 = -q * p.C * std::pow(T, -q - 1.0) * std::pow(B, q);
      const double ut2 = p.C * std::pow(T, -q) * q * std::pow(B, q - 1.0) * Bt;
      const double Wc = std::pow(p.C, m) * std::pow(T, -q - 1.0) * (q + 1.0);
      const double wrr1 = Wc * q * std::pow(B, q - 1.0) * Br * Br;
      const double wrr2 = Wc * std::pow(B, q) * Brr;
      const double dr = drift_at(mf, i) * Wc * std::pow(B, q) * Br;
      const double res = ut1 + ut2 - wrr1 - wrr2 - dr;
      const double scale = std::abs(ut1) + std::abs(ut2) + std::abs(wrr1) + std::abs(wrr2) +
                           std::abs(dr);
      tr.add(r, t, sign * res / scale, "residual");
    }
  }
  if (!any) throw InvalidArgument("empty verification region");
  auto rep = tr.report();
  if (rep.witnesses.empty()) rep.satisfied = true;  // barrier vanishes on the whole region
  return rep;
}

}  // namespace pmelab
