#pragma once

#include "relurec/network.hpp"
#include "relurec/tensor.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace relurec {

struct RecoveryConfig {
  /// Order parameter; directions come from T_{2l+1} and T_{2l+2}.
  int ell = 1;
  /// Frobenius-error budget for the estimated order-(2l+2) tensor (the
  /// noisier of the pair; the odd tensor is assumed a factor sqrt(d) less
  /// noisy). When positive, rank detection and weight pruning refuse
  /// anything below twice the implied noise operator norm. Zero means exact
  /// inputs and leaves the desk-scale defaults in charge.
  double eta0 = 0.0;
  /// Rank-detection threshold as a fraction of the largest singular value of
  /// the detection matricization.
  double eta1_rel = 1e-4;
  /// Rank-1 terms with |weight| below this are discarded.
  double eta2 = 1e-3;
  /// Two directions within eta3 (up to sign) are duplicates.
  double eta3 = 0.1;
  /// Cap on the detected ranks. Must be set to a positive value.
  int m_max = 0;
  /// Constant c in the good-bias radius c sqrt(log(1/(eps m d B))).
  double good_set_c = 1.5;

  void validate() const;
};

/// |b| below this radius puts a unit in the good set G for accuracy eps.
double good_bias_radius(const RecoveryConfig& cfg, double eps, int m, int d, double B);

struct DirectionCandidate {
  Eigen::VectorXd w;
  /// Coefficient of w^(x)(2l+1) in the odd tensor, for this orientation of w.
  std::optional<double> weight_odd;
  /// Coefficient of w^(x)(2l+2) in the even tensor (orientation-free).
  std::optional<double> weight_even;
  std::string source;
};

/// Steps 1-4 of the thresholded recovery: flatten, detect ranks, decompose
/// both tensors, extract directions, prune |weight| < eta2, then dedup in
/// descending |weight| keeping w only if min(||w - u||, ||w + u||) > eta3
/// against everything kept so far.
std::vector<DirectionCandidate> recover_directions(const DenseTensor& T_odd,
                                                   const DenseTensor& T_even,
                                                   const RecoveryConfig& cfg,
                                                   std::uint64_t seed);

struct RecoveredUnit {
  double a = 0.0;
  double b = 0.0;
  Eigen::VectorXd w;
  /// Set by fix_signs; +1/-1 when the orientation was resolved.
  std::optional<int> sign_resolved;
  /// Which tensor(s) produced the direction.
  std::string source;
  /// False when the scalar systems could not pin (a, b) for this unit
  /// (vanishing gamma_q); such units are flagged, not fatal.
  bool scalars_ok = true;
};

/// Scalar recovery against the coefficient family: least-squares solves
/// sum_i zeta_j(i) vec(w_i^(x)j) = vec(T_j), then per unit inverts the
/// Hermite recurrence. For ell = 1 (orders j = 2, 3):
/// b = -zeta_3/zeta_2, a = zeta_2 sqrt(2 pi) exp(b^2/2). For ell >= 2
/// (orders ell..ell+3), with gamma indexed by Hermite degree
/// (gamma_{j-2} = zeta_j) and q = argmax_{q in {ell-1, ell}} |gamma_q|:
/// b = -(gamma_{q+1} + q gamma_{q-1})/gamma_q and
/// a = (-1)^q sqrt(2 pi) gamma_q exp(b^2/2)/He_q(b). The multiplier q is the
/// Hermite degree, not the tensor order.
std::vector<RecoveredUnit> recover_scalars(const std::vector<Eigen::VectorXd>& directions,
                                           const HermiteCoefficientSet& coeffs,
                                           const RecoveryConfig& cfg);

/// Full-rank sign fixing: solves sum_i z_i a_i w_i = T_1 and flips (b_i, w_i)
/// by sign(z_i). Units with |z_i| < 1e-10 keep an unresolved sign. Units
/// flagged by recover_scalars are excluded from the system.
std::vector<RecoveredUnit> fix_signs(std::vector<RecoveredUnit> units,
                                     const Eigen::VectorXd& T1);

/// recover_directions -> recover_scalars -> (ell = 1 and m' <= d) fix_signs,
/// on exact coefficients or empirical estimates alike.
std::vector<RecoveredUnit> recover_parameters(const HermiteCoefficientSet& coeffs,
                                              const RecoveryConfig& cfg,
                                              std::uint64_t seed);

/// Recovered-units JSON: [{"a", "b", "w", "sign_resolved", "source"}].
void save_units(const std::filesystem::path& path, const std::vector<RecoveredUnit>& units);
std::vector<RecoveredUnit> load_units(const std::filesystem::path& path);

}  // namespace relurec
