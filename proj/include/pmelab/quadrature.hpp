#pragma once

#include <cstddef>

#include "pmelab/model_manifold.hpp"

namespace pmelab {

// I0 = int_a^b exp(k (phi(s) - phi(ref))) ds
// I1 = int_a^b exp(k (phi(s) - phi(ref))) (s - a)/(b - a) ds
// for [a, b] inside grid interval j; ref is the end where k phi is largest
struct ExpMoments {
  double i0 = 0.0;
  double i1 = 0.0;
  double log_ref = 0.0;  // k phi(ref)
};

ExpMoments exp_moments(const ModelFunction& mf, std::size_t j, double k, double a, double b);

// log of int_a^b psi^k ds, any a < b on the grid (a may be 0 when k > 0)
double log_int_psi_pow(const ModelFunction& mf, double k, double a, double b);

// log(exp(x) + exp(y))
double log_add(double x, double y);

}  // namespace pmelab
