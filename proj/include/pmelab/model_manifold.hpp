#pragma once

#include <string>
#include <vector>

#include "pmelab/grid.hpp"

namespace pmelab {

enum class Variant { Flat, RampThenPower, FloorMaxPower, ExplicitExp };

std::string to_string(Variant v);
Variant variant_from_string(const std::string& s);

struct CurvatureSpec {
  int n = 3;
  double mu = 2.0;
  double Q = 1.0;
  double R = 1.0;
  Variant variant = Variant::RampThenPower;
  // floor of max{D, Q r^{2mu}}; <= 0 selects Q (2R)^{2mu}
  double D = 0.0;
  // ExplicitExp parameters and its matching radius
  double a = 0.0, A = 0.0, alpha = 0.0, rbar = 0.0;

  static CurvatureSpec flat(int n);
  static CurvatureSpec ramp_then_power(int n, double mu, double Q, double R);
  static CurvatureSpec floor_max_power(int n, double mu, double Q, double D);
  // psi = r up to rbar, A(exp(a r^alpha) - exp(a rbar^alpha)) + rbar beyond
  static CurvatureSpec explicit_exp(int n, double a, double A, double alpha);

  double floor_value() const;
  // w in psi'' = w psi
  double w(double r) const;
  // radii where w is not smooth
  std::vector<double> breakpoints() const;
  void validate() const;
};

// closed form of the ExplicitExp psi and psi'
double explicit_psi(const CurvatureSpec& s, double r);
double explicit_dpsi(const CurvatureSpec& s, double r);

struct ModelFunction {
  RadialGrid grid;
  CurvatureSpec spec;
  // phi = log psi (-inf at 0) and p = psi'/psi (+inf at 0)
  std::vector<double> log_psi;
  std::vector<double> p;
  std::vector<double> w;

  std::size_t size() const { return grid.size(); }
  double r(std::size_t i) const { return grid.r[i]; }
  // throw OverflowAtRadius when exp(phi) is not representable
  double psi(std::size_t i) const;
  double dpsi(std::size_t i) const;
  double r_safe() const;
  // cubic Hermite reconstruction of phi between nodes
  double log_psi_at(double x) const;
  double log_psi_at(double x, std::size_t interval) const;
  double p_at(double x) const;
};

ModelFunction build_psi(const CurvatureSpec& spec, const RadialGrid& grid);

struct DriftField {
  RadialField value;  // (n-1) psi'/psi; node 0 holds NaN
  bool origin_singular = true;
};

DriftField drift_coefficient(const ModelFunction& mf);
RadialField curvature_of(const ModelFunction& mf);

struct RatioEstimate {
  double estimate;
  double deviation;
};

// mean of psi'/(r^mu psi) over nodes in [lo, hi], and max |ratio - sqrt Q|
RatioEstimate asymptotic_ratio(const ModelFunction& mf, double lo, double hi);

// columns r, psi, dpsi, w; rows stop at r_safe
void write_model_csv(const std::string& path, const ModelFunction& mf);

}  // namespace pmelab
