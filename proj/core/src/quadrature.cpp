#include "relurec/quadrature.hpp"

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace relurec {

void gauss_legendre(int n, std::vector<double>& nodes, std::vector<double>& weights) {
  if (n < 1) throw std::domain_error("gauss_legendre: need at least one node");
  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(n, n);
  for (int i = 1; i < n; ++i) {
    const double b = i / std::sqrt(4.0 * i * i - 1.0);
    J(i, i - 1) = b;
    J(i - 1, i) = b;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(J);
  nodes.resize(n);
  weights.resize(n);
  for (int i = 0; i < n; ++i) {
    nodes[i] = es.eigenvalues()[i];
    const double v0 = es.eigenvectors()(0, i);
    weights[i] = 2.0 * v0 * v0;
  }
}

double integrate(const std::function<double(double)>& f, double a, double b,
                 int panels, int points_per_panel) {
  static thread_local std::vector<double> nodes, weights;
  static thread_local int cached_n = 0;
  if (cached_n != points_per_panel) {
    gauss_legendre(points_per_panel, nodes, weights);
    cached_n = points_per_panel;
  }
  const double h = (b - a) / panels;
  double total = 0.0;
  for (int p = 0; p < panels; ++p) {
    const double lo = a + p * h;
    const double mid = lo + h / 2.0;
    double s = 0.0;
    for (int i = 0; i < points_per_panel; ++i) {
      s += weights[i] * f(mid + nodes[i] * h / 2.0);
    }
    total += s * h / 2.0;
  }
  return total;
}

double gaussian_expectation(const std::function<double(double)>& g, double mean,
                            const std::vector<double>& breaks, double half_width,
                            int panels) {
  const double lo = mean - half_width;
  const double hi = mean + half_width;
  std::vector<double> cuts = {lo, hi};
  for (double b : breaks) {
    if (b > lo && b < hi) cuts.push_back(b);
  }
  std::sort(cuts.begin(), cuts.end());
  const double norm = 1.0 / std::sqrt(2.0 * std::numbers::pi);
  auto integrand = [&](double z) {
    const double u = z - mean;
    return g(z) * norm * std::exp(-u * u / 2.0);
  };
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    total += integrate(integrand, cuts[i], cuts[i + 1], panels);
  }
  return total;
}

}  // namespace relurec
