#pragma once

#include <functional>
#include <vector>

namespace relurec {

/// n-point Gauss-Legendre rule on [-1, 1], via the eigenvalues of the Jacobi
/// matrix (Golub-Welsch).
void gauss_legendre(int n, std::vector<double>& nodes, std::vector<double>& weights);

/// Composite Gauss-Legendre integral of f over [a, b].
double integrate(const std::function<double(double)>& f, double a, double b,
                 int panels = 64, int points_per_panel = 20);

/// E[g(z)] for z ~ N(mean, 1), integrating over mean +/- half_width. Pass the
/// kink locations of g in `breaks` so panels do not straddle them.
double gaussian_expectation(const std::function<double(double)>& g, double mean,
                            const std::vector<double>& breaks = {},
                            double half_width = 12.0, int panels = 64);

}  // namespace relurec
