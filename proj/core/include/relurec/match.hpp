#pragma once

#include "relurec/network.hpp"
#include "relurec/recover.hpp"

#include <vector>

namespace relurec {

struct UnitMatch {
  int true_index = -1;
  int recovered_index = -1;
  /// Sign minimizing the cost.
  int sign = 1;
  double w_error = 0.0;
  double b_error = 0.0;
  double a_error = 0.0;
  double cost = 0.0;
};

struct MatchReport {
  std::vector<UnitMatch> matches;
  std::vector<int> unmatched_true;
  std::vector<int> unmatched_recovered;
  double total_cost = 0.0;

  double max_unit_cost() const;
};

/// Optimal assignment between true and recovered units under
/// cost(i, j) = min_{xi in {+1,-1}} ||w_i - xi w_j|| + |b_i - xi b_j| +
/// |a_i - a_j|, solved exactly (Hungarian algorithm) for sizes up to 64.
MatchReport match_units(const ReluNetwork& truth,
                        const std::vector<RecoveredUnit>& recovered);

/// Exact rectangular assignment: minimizes total cost over one-to-one maps
/// covering min(rows, cols) pairs. Exposed for the matching tests.
std::vector<int> hungarian_assignment(const Eigen::MatrixXd& cost);

}  // namespace relurec
