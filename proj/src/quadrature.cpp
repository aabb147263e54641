#include "pmelab/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <boost/math/quadrature/gauss.hpp>

namespace pmelab {

namespace {

using Gauss = boost::math::quadrature::gauss<double, 10>;

// relative weight below which a piece is dropped
constexpr double kDropLimit = 45.0;

}  // namespace

double log_add(double x, double y) {
  if (x == -std::numeric_limits<double>::infinity()) return y;
  if (y == -std::numeric_limits<double>::infinity()) return x;
  double m = std::max(x, y);
  return m + std::log1p(std::exp(-std::abs(x - y)));
}

ExpMoments exp_moments(const ModelFunction& mf, std::size_t j, double k, double a, double b) {
  ExpMoments out;
  const double len = b - a;
  if (!(len > 0)) return out;
  // phi increases, so the integrand peaks at b when k > 0
  const bool right = k > 0;
  const double ref = right ? b : a;
  const double phi_ref = mf.log_psi_at(ref, j);
  out.log_ref = k * phi_ref;
  auto weight = [&](double s) { return std::exp(k * (mf.log_psi_at(s, j) - phi_ref)); };

  double pos = ref;
  double step;
  {
    double slope = std::abs(k * mf.p_at(std::clamp(ref, a + 1e-3 * len, b - 1e-3 * len)));
    step = slope > 0 ? 1.0 / slope : len;
  }
  double covered = 0.0;
  while (covered < len) {
    double l = std::min(step, len - covered);
    double lo = right ? pos - l : pos;
    double hi = right ? pos : pos + l;
    out.i0 += Gauss::integrate(weight, lo, hi);
    out.i1 += Gauss::integrate([&](double s) { return weight(s) * (s - a) / len; }, lo, hi);
    covered += l;
    pos = right ? lo : hi;
    if (covered >= len) break;
    double drop = -std::log(std::max(weight(pos), 1e-300));
    if (drop > kDropLimit) break;
    // far from the peak a piece may span a larger drop
    double slope = std::abs(k * mf.p_at(pos));
    double allowed = std::max(1.0, 0.5 * drop);
    step = slope > 0 ? std::min(1.5 * l, allowed / slope) : 1.5 * l;
  }
  return out;
}

double log_int_psi_pow(const ModelFunction& mf, double k, double a, double b) {
  const auto& r = mf.grid.r;
  double acc = -std::numeric_limits<double>::infinity();
  std::size_t j = std::min(mf.grid.locate(a), mf.size() - 2);
  while (j + 1 < mf.size() && r[j] < b) {
    double lo = std::max(a, r[j]);
    double hi = std::min(b, r[j + 1]);
    if (hi > lo) {
      ExpMoments m = exp_moments(mf, j, k, lo, hi);
      if (m.i0 > 0) acc = log_add(acc, m.log_ref + std::log(m.i0));
    }
    ++j;
  }
  return acc;
}

}  // namespace pmelab
