#pragma once

#include "relurec/tensor.hpp"

#include <Eigen/Core>

#include <span>
#include <stdexcept>

namespace relurec {

/// Highest supported Hermite degree. Degrees above this would push k! past
/// what the downstream normalizations tolerate in double precision, so they
/// are rejected up front.
inline constexpr int kHermiteDegreeCap = 32;

/// k! as a double. Exact for k <= 22 (22!/2^19 still fits in the 53-bit
/// mantissa); correctly rounded above that.
double factorial(int k);

/// k!! with (-1)!! = 0!! = 1.
double double_factorial(int k);

/// He_k(x), probabilist's normalization, by the forward three-term
/// recurrence He_{r+1}(x) = x He_r(x) - r He_{r-1}(x).
inline double he_eval(int k, double x) {
  if (k < 0 || k > kHermiteDegreeCap) {
    throw std::domain_error("Hermite degree outside [0, 32]");
  }
  double prev = 1.0;  // He_0
  if (k == 0) return prev;
  double cur = x;  // He_1
  for (int r = 1; r < k; ++r) {
    const double next = x * cur - static_cast<double>(r) * prev;
    prev = cur;
    cur = next;
  }
  return cur;
}

/// He_0(x), ..., He_k(x) written into out (size k+1), one recurrence pass.
inline void he_eval_all(int k, double x, std::span<double> out) {
  if (k < 0 || k > kHermiteDegreeCap) {
    throw std::domain_error("Hermite degree outside [0, 32]");
  }
  out[0] = 1.0;
  if (k == 0) return;
  out[1] = x;
  for (int r = 1; r < k; ++r) {
    out[r + 1] = x * out[r] - static_cast<double>(r) * out[r - 1];
  }
}

/// Order-k multivariate Hermite tensor: entry at multi-index alpha is
/// prod_i He_{n_i}(x_i), n_i the number of times coordinate i appears in
/// alpha. Symmetric by construction; computed on canonical indices and
/// broadcast.
DenseTensor he_tensor(int k, const Eigen::VectorXd& x);

/// Hermite coefficients of the ReLU in the orthonormal basis He_k/sqrt(k!):
/// 1/sqrt(2 pi), 1/2, then (-1)^{(k-2)/2} (k-3)!! / sqrt(2 pi k!) for even k
/// and 0 for odd k >= 3.
double relu_hermite_coeff(int k);

/// |He_k(x)| exp(-x^2/2) <= sqrt(k!); used by the property suites.
bool cramer_bound_check(int k, double x);

}  // namespace relurec
