#include "relurec/match.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace relurec {

namespace {

/// Potential-based shortest augmenting path assignment (rows <= cols).
/// Returns the matched column per row.
std::vector<int> assign_rows(const Eigen::MatrixXd& a) {
  const int n = static_cast<int>(a.rows());
  const int m = static_cast<int>(a.cols());
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(m + 1, 0.0);
  std::vector<int> p(m + 1, 0), way(m + 1, 0);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::vector<double> minv(m + 1, inf);
    std::vector<char> used(m + 1, false);
    do {
      used[j0] = true;
      const int i0 = p[j0];
      int j1 = -1;
      double delta = inf;
      for (int j = 1; j <= m; ++j) {
        if (used[j]) continue;
        const double cur = a(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= m; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const int j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<int> row_to_col(n, -1);
  for (int j = 1; j <= m; ++j) {
    if (p[j] != 0) row_to_col[p[j] - 1] = j - 1;
  }
  return row_to_col;
}

}  // namespace

std::vector<int> hungarian_assignment(const Eigen::MatrixXd& cost) {
  if (cost.rows() == 0 || cost.cols() == 0) {
    return std::vector<int>(cost.rows(), -1);
  }
  if (cost.rows() > 64 || cost.cols() > 64) {
    throw std::domain_error("assignment supported up to 64 units");
  }
  if (cost.rows() <= cost.cols()) return assign_rows(cost);
  const auto col_to_row = assign_rows(cost.transpose());
  std::vector<int> row_to_col(cost.rows(), -1);
  for (std::size_t c = 0; c < col_to_row.size(); ++c) {
    if (col_to_row[c] >= 0) row_to_col[col_to_row[c]] = static_cast<int>(c);
  }
  return row_to_col;
}

double MatchReport::max_unit_cost() const {
  double worst = 0.0;
  for (const auto& m : matches) worst = std::max(worst, m.cost);
  return worst;
}

MatchReport match_units(const ReluNetwork& truth,
                        const std::vector<RecoveredUnit>& recovered) {
  const int n = truth.m;
  const int m = static_cast<int>(recovered.size());
  MatchReport report;
  if (n == 0 || m == 0) {
    for (int i = 0; i < n; ++i) report.unmatched_true.push_back(i);
    for (int j = 0; j < m; ++j) report.unmatched_recovered.push_back(j);
    return report;
  }

  Eigen::MatrixXd cost(n, m);
  Eigen::MatrixXi best_sign(n, m);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < m; ++j) {
      double best = std::numeric_limits<double>::infinity();
      int sign = 1;
      for (int xi : {1, -1}) {
        const double c = (truth.W.col(i) - xi * recovered[j].w).norm() +
                         std::abs(truth.b[i] - xi * recovered[j].b) +
                         std::abs(truth.a[i] - recovered[j].a);
        if (c < best) {
          best = c;
          sign = xi;
        }
      }
      cost(i, j) = best;
      best_sign(i, j) = sign;
    }
  }

  const auto row_to_col = hungarian_assignment(cost);
  std::vector<char> used_col(m, false);
  for (int i = 0; i < n; ++i) {
    const int j = row_to_col[i];
    if (j < 0) {
      report.unmatched_true.push_back(i);
      continue;
    }
    used_col[j] = true;
    UnitMatch um;
    um.true_index = i;
    um.recovered_index = j;
    um.sign = best_sign(i, j);
    um.w_error = (truth.W.col(i) - um.sign * recovered[j].w).norm();
    um.b_error = std::abs(truth.b[i] - um.sign * recovered[j].b);
    um.a_error = std::abs(truth.a[i] - recovered[j].a);
    um.cost = cost(i, j);
    report.total_cost += um.cost;
    report.matches.push_back(um);
  }
  for (int j = 0; j < m; ++j) {
    if (!used_col[j]) report.unmatched_recovered.push_back(j);
  }
  return report;
}

}  // namespace relurec
