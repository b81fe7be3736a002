#pragma once

#include "relurec/tensor.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <vector>

namespace relurec {

/// One rank-1 term of an order-3 decomposition. Factors are unit vectors;
/// the weight carries all magnitude (and the sign left over after each
/// factor's largest-magnitude coordinate is made positive).
struct Rank1Term {
  double weight = 0.0;
  Eigen::VectorXd u, v, z;
};

struct JennrichDiagnostics {
  /// Smallest gap between paired eigenvalues of the first contraction.
  double eigengap = 0.0;
  /// ||T - sum of recovered terms||_F.
  double residual = 0.0;
  int retries = 0;
  /// Greedy reciprocal-pairing ties broken by index order.
  int pairing_ties = 0;
};

struct DecompositionResult {
  std::vector<Rank1Term> terms;
  int detected_rank = 0;
  JennrichDiagnostics diagnostics;
};

/// Largest r with s_r(M) > eta1 (0 if none), capped at m_max.
int detect_rank(const Eigen::MatrixXd& M, double eta1, int m_max);
int detect_rank(const DenseTensor& M, double eta1, int m_max);

/// Simultaneous-diagonalization decomposition of an order-3 tensor with
/// target rank k. Contracts the third mode against two independent random
/// unit vectors g, h; eigen-decomposes T_g T_h^+ for the first-mode factors
/// and T_h^T (T_g^T)^+ for the second-mode factors (pseudo-inverses truncated
/// at rank k); pairs the two eigensystems by nearest-reciprocal eigenvalue;
/// then recovers third-mode factors and weights by least squares against
/// vec(T). Retries with fresh contractions on unstable eigenvalues.
DecompositionResult decompose(const DenseTensor& T, int rank, std::uint64_t seed);

struct ExtractedDirection {
  Eigen::VectorXd w;
  double weight = 0.0;
  /// True when the total order is odd could not orient the sign (even order).
  bool sign_ambiguous = false;
};

/// Treats a rank-1 term over (d^l1, d^l2, d^l3) as a noisy w^(x)(l1+l2+l3),
/// reshapes to d x d^(l1+l2+l3-1) and takes the leading left singular
/// vector. The sign convention makes the largest-magnitude coordinate of w
/// positive; for even total order the leftover sign moves into the weight,
/// for odd order the weight is tied to the returned orientation.
ExtractedDirection extract_direction(const Rank1Term& term, int d, int l1, int l2, int l3);

}  // namespace relurec
