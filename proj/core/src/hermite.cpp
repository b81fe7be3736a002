#include "relurec/hermite.hpp"

#include <array>
#include <cmath>
#include <numbers>

namespace relurec {

namespace {

constexpr int kTableSize = kHermiteDegreeCap + 3;

std::array<double, kTableSize> make_factorials() {
  std::array<double, kTableSize> t{};
  t[0] = 1.0;
  for (int k = 1; k < kTableSize; ++k) t[k] = t[k - 1] * k;
  return t;
}

const std::array<double, kTableSize> kFactorial = make_factorials();

}  // namespace

double factorial(int k) {
  if (k < 0 || k >= kTableSize) throw std::domain_error("factorial argument out of range");
  return kFactorial[k];
}

double double_factorial(int k) {
  if (k < -1) throw std::domain_error("double factorial argument out of range");
  double r = 1.0;
  for (int v = k; v > 1; v -= 2) r *= v;
  return r;
}

DenseTensor he_tensor(int k, const Eigen::VectorXd& x) {
  if (k < 0 || k > kHermiteDegreeCap) {
    throw std::domain_error("Hermite degree outside [0, 32]");
  }
  const int d = static_cast<int>(x.size());
  if (k == 0) return DenseTensor::scalar(1.0);

  // He_j(x_i) for all coordinates i and degrees j <= k.
  Eigen::MatrixXd he(d, k + 1);
  std::vector<double> row(k + 1);
  for (int i = 0; i < d; ++i) {
    he_eval_all(k, x[i], row);
    for (int j = 0; j <= k; ++j) he(i, j) = row[j];
  }

  const auto canon = canonical_multi_indices(d, k);
  std::vector<double> values(canon.size());
  for (std::size_t c = 0; c < canon.size(); ++c) {
    const auto counts = index_counts(canon[c], d);
    double prod = 1.0;
    for (int i = 0; i < d; ++i) {
      if (counts[i] > 0) prod *= he(i, counts[i]);
    }
    values[c] = prod;
  }
  return symmetric_broadcast(d, k, values);
}

double relu_hermite_coeff(int k) {
  if (k < 0) throw std::domain_error("negative Hermite order");
  const double inv_sqrt_2pi = 1.0 / std::sqrt(2.0 * std::numbers::pi);
  if (k == 0) return inv_sqrt_2pi;
  if (k == 1) return 0.5;
  if (k % 2 != 0) return 0.0;
  const double sign = ((k - 2) / 2) % 2 == 0 ? 1.0 : -1.0;
  return sign * double_factorial(k - 3) * inv_sqrt_2pi / std::sqrt(factorial(k));
}

bool cramer_bound_check(int k, double x) {
  return std::abs(he_eval(k, x)) * std::exp(-x * x / 2.0) <= std::sqrt(factorial(k));
}

}  // namespace relurec
