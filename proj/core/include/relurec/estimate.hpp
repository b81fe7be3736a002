#pragma once

#include "relurec/network.hpp"
#include "relurec/tensor.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace relurec {

/// Empirical Hermite coefficient T_k = (1/N) sum_i y_i He_k(x_i).
///
/// Only the C(d+k-1, k) canonical symmetric entries are accumulated per
/// sample and broadcast at the end. Accumulation is Kahan-compensated inside
/// fixed 2^16-sample blocks with a fixed-order cross-block reduction, so the
/// result is bit-identical for any worker count.
DenseTensor estimate_coefficient(const Dataset& data, int k);

/// T_k together with the standard error of every canonical entry (ordered as
/// canonical_multi_indices(d, k)); one accumulation pass produces both.
struct CoefficientEstimate {
  DenseTensor tensor;
  std::vector<double> entry_stderr;
};

CoefficientEstimate estimate_with_stderr(const Dataset& data, int k);

struct EstimateReport {
  int k = 0;
  std::size_t N = 0;
  DenseTensor tensor;
  std::vector<double> entry_stderr;
  /// Self-estimated ||T_k - f_hat_k||_F from the per-entry standard errors;
  /// no ground truth needed. Feeds the eta_0 noise budget downstream.
  double frobenius_error_estimate = 0.0;
  std::optional<double> frobenius_error_vs_exact;
};

EstimateReport estimate_with_report(const Dataset& data, int k,
                                    const ReluNetwork* truth = nullptr);

/// The self-estimate alone: sqrt(sum over entries of Var(y He_alpha) / N).
double estimate_error_estimate(const Dataset& data, int k);

/// Aggregates per-canonical-entry standard errors into a Frobenius-error
/// estimate using the orbit multiplicities.
double frobenius_error_from_stderr(int d, int k, std::span<const double> entry_stderr);

/// Variance-reduced estimates of T_0..T_kmax: before accumulating order k,
/// the degree-(k-1) Hermite truncation built from the lower-order estimates
/// is subtracted from the labels. Orthogonality keeps every expectation
/// equal to the plain estimator's; the label variance drops to the Hermite
/// mass at degrees >= k, which for nearly-linear networks is a large
/// constant-factor win. Entry standard errors (for the residualized
/// statistic) are attached to the returned set.
HermiteCoefficientSet estimate_coefficients_cv(const Dataset& data, int k_max);

struct ConvergencePoint {
  std::size_t N = 0;
  double median_error = 0.0;
};

/// Median over seeds of ||T_k - f_hat_k||_F at each N. Each seed samples the
/// largest N once and reuses prefixes for the smaller ones.
std::vector<ConvergencePoint> convergence_curve(const ReluNetwork& net, int k,
                                                std::span<const std::size_t> Ns,
                                                std::span<const std::uint64_t> seeds);

/// Least-squares slope of log(median error) against log N.
double fitted_loglog_slope(const std::vector<ConvergencePoint>& curve);

}  // namespace relurec
