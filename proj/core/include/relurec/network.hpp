#pragma once

#include "relurec/tensor.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

namespace relurec {

/// Standard Gaussian CDF, computed through erfc for full tail accuracy.
double gaussian_cdf(double z);

/// Ground-truth model f(x) = a^T relu(W^T x + b). Columns of W are unit
/// vectors; B is the declared bound on |a_i|, |b_i|, |W_ij| with
/// min |a_i| >= 1/B.
struct ReluNetwork {
  int d = 0;
  int m = 0;
  double B = 1.0;
  Eigen::VectorXd a;
  Eigen::VectorXd b;
  Eigen::MatrixXd W;  // d x m

  /// Structural invariants: shapes, finite entries, unit columns (1e-10).
  void validate() const;
};

/// B-boundedness violations as human-readable strings (empty when clean).
/// Kept separate from validate(): smoothing can push parameters past the
/// declared bound, and that is reported rather than clamped.
std::vector<std::string> check_bounds(const ReluNetwork& net);

double evaluate(const ReluNetwork& net, const Eigen::VectorXd& x);

/// N samples with x ~ N(0, I_d), y = f(x). Row-major xs, one sample per row.
struct Dataset {
  int d = 0;
  std::vector<double> xs;
  std::vector<double> ys;

  std::size_t size() const noexcept { return ys.size(); }
  Eigen::Map<const Eigen::VectorXd> x(std::size_t i) const {
    return {xs.data() + i * static_cast<std::size_t>(d), d};
  }
  double y(std::size_t i) const { return ys[i]; }

  /// Copy of samples [begin, end).
  Dataset slice(std::size_t begin, std::size_t end) const;
};

/// Seeded sampling, chunked with per-chunk derived seeds so the result is
/// identical for any worker count.
Dataset sample(const ReluNetwork& net, std::size_t N, std::uint64_t seed);

/// The order-k moment tensor E[f(x) He_k(x)] in closed form:
///   k = 0: sum_i a_i (b_i Phi(b_i) + exp(-b_i^2/2)/sqrt(2 pi))      (scalar)
///   k = 1: sum_i a_i Phi(b_i) w_i
///   k >= 2: sum_i (-1)^k a_i He_{k-2}(b_i) exp(-b_i^2/2)/sqrt(2 pi) w_i^(x)k
double hermite_coeff_scalar(const ReluNetwork& net, int k, int unit);
DenseTensor exact_hermite_coeff(const ReluNetwork& net, int k);

/// Map from order k to the tensor f_hat_k or its empirical estimate T_k.
/// Estimated sets may also carry the standard error of each canonical entry
/// (ordered as canonical_multi_indices), which downstream fits use as
/// inverse-variance weights.
struct HermiteCoefficientSet {
  std::map<int, DenseTensor> tensors;
  std::map<int, std::vector<double>> entry_stderr;

  bool has(int k) const { return tensors.count(k) != 0; }
  const DenseTensor& at(int k) const;
  void set(int k, DenseTensor t) { tensors[k] = std::move(t); }
  void set_stderr(int k, std::vector<double> se) { entry_stderr[k] = std::move(se); }
  const std::vector<double>* stderr_for(int k) const {
    auto it = entry_stderr.find(k);
    return it == entry_stderr.end() ? nullptr : &it->second;
  }
};

HermiteCoefficientSet exact_coefficients(const ReluNetwork& net, int k_max);

/// Smoothed-analysis instance: W_hat = W + Xi with Xi_ij ~ N(0, tau^2/d),
/// columns re-normalized with the compensating rescale a_i <- ||w_i|| a_i,
/// b_i <- b_i / ||w_i||.
struct SmoothedSpec {
  ReluNetwork base;
  double tau = 0.0;
  int ell = 1;
  std::uint64_t seed = 0;
};

struct SmoothedInstance {
  ReluNetwork net;
  /// Empirical s_m(W_hat^{odot ell}).
  double smin_khatri_rao = 0.0;
  std::vector<std::string> bound_violations;
};

SmoothedInstance smoothed_instance(const SmoothedSpec& spec);

/// Builds the sign-flip pair of Claim-style non-identifiability: given unit
/// columns with a numerically dependent span, f has a_i equal to a null
/// combination beta_i (b = 0) and g flips the sign of every w_i with
/// beta_i != 0, yet f == g pointwise.
std::pair<ReluNetwork, ReluNetwork> nonidentifiable_pair(const Eigen::MatrixXd& w_columns);

struct GeneratorOptions {
  int d = 4;
  int m = 2;
  double B = 2.0;
  double bias_bound = 1.0;
  /// Rejection floor on s_m(W^{odot ell}).
  double smin_floor = 1e-3;
  int ell = 1;
  int max_attempts = 1000;
};

/// W columns uniform on the sphere (rejected until s_m(W^{odot ell}) clears
/// the floor), |a_i| uniform in [1/B, B] with random sign, b_i uniform in
/// [-bias_bound, bias_bound].
ReluNetwork random_network(const GeneratorOptions& opt, std::uint64_t seed);

/// Truncated Hermite expansion of the statistical risk:
/// sum_{k<=K} (1/k!) ||T_k(g) - f_hat_k(f)||_F^2, evaluated over canonical
/// symmetric entries with orbit multiplicities (no dense tensors). last_term
/// is the k = K summand, a proxy for the discarded tail.
struct RiskDecomposition {
  double risk = 0.0;
  double last_term = 0.0;
  int K = 0;
};

RiskDecomposition truncated_hermite_risk(const ReluNetwork& f, const ReluNetwork& g,
                                         int K = 14);

/// Monte-Carlo E[(f - g)^2] over fresh standard Gaussians, with the standard
/// error of the estimate.
struct MseEstimate {
  double mse = 0.0;
  double stderr_ = 0.0;
  std::size_t N = 0;
};

MseEstimate mc_squared_distance(const ReluNetwork& f, const ReluNetwork& g,
                                std::size_t N, std::uint64_t seed);

}  // namespace relurec
