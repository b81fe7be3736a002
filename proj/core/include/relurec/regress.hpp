#pragma once

#include "relurec/network.hpp"
#include "relurec/recover.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <vector>

namespace relurec {

/// Expanded feature map over recovered units. Full8 emits one feature per
/// sign combination (xi1, xi2, xi3) in {-1,+1}^3 and unit:
/// xi3 a sigma(xi1 w.x + xi2 b). Coordinated2 keeps xi3 = +1 and ties
/// xi1 = xi2, which suffices when the (w, b) ambiguity is coordinated and the
/// sign of a is known. Both append the raw block (x, 1).
enum class FeatureMode { Full8, Coordinated2 };

struct FeatureMap {
  std::vector<RecoveredUnit> units;
  FeatureMode mode = FeatureMode::Coordinated2;
  int d = 0;

  int features_per_unit() const { return mode == FeatureMode::Full8 ? 8 : 2; }
  int dim() const {
    return features_per_unit() * static_cast<int>(units.size()) + d + 1;
  }
};

Eigen::VectorXd build_features(const FeatureMap& map, const Eigen::VectorXd& x);

/// tau = 20 m (8|S| + d) B sqrt(log(m d B |S| / eps)). Requires eps in (0,1)
/// and |S| >= 1.
double default_tau(int m, int S_size, int d, double B, double eps);

/// Default projection radius sqrt(8|S|) + m(1+B), with the 8 replaced by 2 in
/// coordinated mode (same norm counting over the smaller feature block).
double default_radius(int m, int S_size, double B, FeatureMode mode);

struct TruncatedLossSpec {
  double tau = 0.0;
  double radius = 0.0;
  /// PGD iteration cap.
  int steps = 200000;
  /// 0 means 1/L with L the largest eigenvalue of the truncated Gram matrix.
  double step_size = 0.0;
  /// Also solve the ball-constrained least squares exactly (eigendecomposition
  /// plus a dual bisection) and certify the PGD gap below gap_target.
  bool certify = true;
  double gap_target = 0.0;
};

struct PgdResult {
  Eigen::VectorXd beta;
  double loss = 0.0;
  /// Certified suboptimality gap (when certify was set).
  double gap = 0.0;
  double truncated_fraction = 0.0;
  int iterations = 0;
};

/// Minimizes (1/N) sum (y_i - beta . phi(x_i))^2 1(||phi(x_i)|| < tau) over
/// the Euclidean ball by projected gradient descent with a fixed 1/L step.
PgdResult truncated_pgd(const Dataset& data, const FeatureMap& map,
                        const TruncatedLossSpec& spec);

/// Linear absorption of large-bias units: b > 0 contributes a (w.x + b),
/// b < 0 contributes zero. predicted_mse is the quadrature bound on
/// E[(f_P - g_P)^2] via the per-unit tail integrals.
struct LinearSurrogate {
  Eigen::VectorXd beta;
  double c = 0.0;
  double predicted_mse = 0.0;
};

LinearSurrogate absorb_large_bias(const ReluNetwork& fragment, double bias_threshold);

/// Predictor after merging sigma(z)/sigma(-z) feature pairs and rewriting
/// the affine remainder with two units (sigma(z) - sigma(-z) = z); at most
/// units-in-map + 2 hidden units in coordinated mode. A constant-only
/// remainder (measure-zero input) is kept exact with one zero-direction unit.
struct ConsolidatedUnit {
  double beta = 0.0;
  Eigen::VectorXd w;
  double b = 0.0;
};

struct ConsolidatedPredictor {
  int d = 0;
  std::vector<ConsolidatedUnit> units;

  double evaluate(const Eigen::VectorXd& x) const;
  std::size_t hidden_units() const { return units.size(); }
};

ConsolidatedPredictor consolidate(const Eigen::VectorXd& beta, const FeatureMap& map);

struct RegressionOptions {
  /// Hidden-unit count of the target network (enters tau).
  int m = 0;
  double B = 1.0;
  double eps = 0.05;
  FeatureMode mode = FeatureMode::Coordinated2;
  int steps = 200000;
  bool certify = true;
  /// Fresh samples for the held-out MSE estimate (0 disables; needs truth).
  std::size_t eval_samples = 200000;
};

struct RegressionResult {
  ConsolidatedPredictor g;
  Eigen::VectorXd beta;
  double tau = 0.0;
  double mse_estimate = -1.0;
  double mse_stderr = 0.0;
  double truncated_fraction = 0.0;
  double pgd_gap = 0.0;
};

/// Algorithm step 3-4 composition: builds the feature map from S, sets tau,
/// runs truncated PGD on the second half of `data` (split at floor(N/2)),
/// consolidates, and (given the generating network) reports a Monte-Carlo
/// E[(f - g)^2] on fresh samples.
RegressionResult run_regression(const Dataset& data, const std::vector<RecoveredUnit>& S,
                                const RegressionOptions& opt, std::uint64_t seed,
                                const ReluNetwork* truth = nullptr);

double evaluate_predictor(const ConsolidatedPredictor& g, const Eigen::VectorXd& x);

}  // namespace relurec
