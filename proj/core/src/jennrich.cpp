#include "relurec/jennrich.hpp"

#include "relurec/errors.hpp"
#include "relurec/rng.hpp"

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace relurec {

namespace {

constexpr int kMaxRetries = 5;
constexpr double kImagTolerance = 1e-6;
constexpr double kEigengapFloor = 1e-10;

using RowMajorMap =
    Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;

Eigen::MatrixXd contract_third_mode(const DenseTensor& T, const Eigen::VectorXd& g) {
  const auto& dims = T.dims();
  const auto p = static_cast<Eigen::Index>(dims[0]);
  const auto q = static_cast<Eigen::Index>(dims[1]);
  const auto r = static_cast<Eigen::Index>(dims[2]);
  RowMajorMap m3(T.data(), p * q, r);
  Eigen::VectorXd flat = m3 * g;
  return Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                                        Eigen::RowMajor>>(flat.data(), p, q);
}

/// Moore-Penrose pseudo-inverse truncated to the given rank.
Eigen::MatrixXd truncated_pinv(const Eigen::MatrixXd& M, int rank) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(M, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& s = svd.singularValues();
  const int k = std::min<int>(rank, static_cast<int>(s.size()));
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(M.cols(), M.rows());
  for (int i = 0; i < k; ++i) {
    if (s[i] <= 0.0) break;
    out.noalias() +=
        (1.0 / s[i]) * svd.matrixV().col(i) * svd.matrixU().col(i).transpose();
  }
  return out;
}

struct EigenSystem {
  std::vector<double> values;
  std::vector<Eigen::VectorXd> vectors;
  bool stable = false;
};

/// The k largest-magnitude eigenvalues of A with phase-aligned real
/// eigenvectors. stable is false if any of them is meaningfully complex.
EigenSystem top_eigenpairs(const Eigen::MatrixXd& A, int k) {
  EigenSystem out;
  Eigen::EigenSolver<Eigen::MatrixXd> es(A);
  if (es.info() != Eigen::Success) return out;
  const auto& vals = es.eigenvalues();
  std::vector<int> order(vals.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](int i, int j) { return std::abs(vals[i]) > std::abs(vals[j]); });
  for (int t = 0; t < k; ++t) {
    const int i = order[t];
    if (std::abs(vals[i].imag()) > kImagTolerance * std::abs(vals[i])) return out;
    Eigen::VectorXcd col = es.eigenvectors().col(i);
    Eigen::Index imax = 0;
    col.cwiseAbs().maxCoeff(&imax);
    col /= col[imax] / std::abs(col[imax]);  // rotate dominant entry to the real axis
    Eigen::VectorXd real = col.real();
    const double norm = real.norm();
    if (norm < 1e-12) return out;
    out.values.push_back(vals[i].real());
    out.vectors.push_back(real / norm);
  }
  out.stable = true;
  return out;
}

/// Flips v so its largest-magnitude coordinate is positive. Returns the sign
/// applied.
double canonicalize_sign(Eigen::VectorXd& v) {
  Eigen::Index imax = 0;
  v.cwiseAbs().maxCoeff(&imax);
  if (v[imax] < 0.0) {
    v = -v;
    return -1.0;
  }
  return 1.0;
}

struct Pairing {
  std::vector<int> second_for_first;
  int ties = 0;
};

/// Greedy assignment of first-mode eigenvalues mu to second-mode eigenvalues
/// nu by the reciprocal criterion |mu nu - 1|, ties broken by index order.
Pairing pair_reciprocal(const std::vector<double>& mu, const std::vector<double>& nu) {
  const int k = static_cast<int>(mu.size());
  struct Cand {
    double cost;
    int i, j;
  };
  std::vector<Cand> cands;
  cands.reserve(static_cast<std::size_t>(k) * k);
  for (int i = 0; i < k; ++i) {
    for (int j = 0; j < k; ++j) {
      cands.push_back({std::abs(mu[i] * nu[j] - 1.0), i, j});
    }
  }
  std::sort(cands.begin(), cands.end(), [](const Cand& a, const Cand& b) {
    if (a.cost != b.cost) return a.cost < b.cost;
    if (a.i != b.i) return a.i < b.i;
    return a.j < b.j;
  });
  Pairing out;
  out.second_for_first.assign(k, -1);
  std::vector<bool> used_j(k, false);
  int assigned = 0;
  for (std::size_t t = 0; t < cands.size() && assigned < k; ++t) {
    const auto& c = cands[t];
    if (out.second_for_first[c.i] != -1 || used_j[c.j]) continue;
    if (t + 1 < cands.size() && cands[t + 1].cost == c.cost) ++out.ties;
    out.second_for_first[c.i] = c.j;
    used_j[c.j] = true;
    ++assigned;
  }
  return out;
}

double min_pairwise_gap(const std::vector<double>& vals) {
  if (vals.size() < 2) return std::numeric_limits<double>::infinity();
  double gap = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < vals.size(); ++i) {
    for (std::size_t j = i + 1; j < vals.size(); ++j) {
      gap = std::min(gap, std::abs(vals[i] - vals[j]));
    }
  }
  return gap;
}

}  // namespace

int detect_rank(const Eigen::MatrixXd& M, double eta1, int m_max) {
  if (eta1 <= 0.0) throw std::domain_error("detect_rank: eta1 must be positive");
  const Eigen::VectorXd s = singular_values(M);
  int r = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    if (s[i] > eta1) ++r;
  }
  return std::min(r, m_max);
}

int detect_rank(const DenseTensor& M, double eta1, int m_max) {
  return detect_rank(to_matrix(M), eta1, m_max);
}

DecompositionResult decompose(const DenseTensor& T, int rank, std::uint64_t seed) {
  if (T.order() != 3) throw std::domain_error("decompose expects an order-3 tensor");
  const auto p = static_cast<Eigen::Index>(T.dims()[0]);
  const auto q = static_cast<Eigen::Index>(T.dims()[1]);
  const auto r = static_cast<Eigen::Index>(T.dims()[2]);
  if (rank < 0 || rank > std::min(p, q)) {
    throw std::domain_error("decompose: rank must lie in [0, min(p, q)]");
  }

  DecompositionResult result;
  result.detected_rank = rank;
  result.diagnostics.eigengap = std::numeric_limits<double>::infinity();
  if (rank == 0) {
    result.diagnostics.residual = T.frobenius_norm();
    return result;
  }

  Rng rng(derive_seed(seed, "jennrich"));
  bool degenerate_spectrum = false;
  for (int attempt = 0; attempt <= kMaxRetries; ++attempt) {
    Eigen::VectorXd g(r), h(r);
    do {
      for (Eigen::Index i = 0; i < r; ++i) g[i] = rng.gaussian();
    } while (g.norm() < 1e-12);
    do {
      for (Eigen::Index i = 0; i < r; ++i) h[i] = rng.gaussian();
    } while (h.norm() < 1e-12);
    g.normalize();
    h.normalize();

    const Eigen::MatrixXd Tg = contract_third_mode(T, g);
    const Eigen::MatrixXd Th = contract_third_mode(T, h);
    const Eigen::MatrixXd A1 = Tg * truncated_pinv(Th, rank);
    const Eigen::MatrixXd A2 =
        Th.transpose() * truncated_pinv(Tg.transpose(), rank);

    EigenSystem first = top_eigenpairs(A1, rank);
    if (!first.stable) continue;
    EigenSystem second = top_eigenpairs(A2, rank);
    if (!second.stable) continue;

    const double gap = min_pairwise_gap(first.values);
    if (gap < kEigengapFloor) {
      degenerate_spectrum = true;
      continue;
    }
    degenerate_spectrum = false;

    const Pairing pairing = pair_reciprocal(first.values, second.values);

    // Third-mode factors and weights by least squares against vec(T).
    Eigen::MatrixXd K(p * q, rank);
    std::vector<Eigen::VectorXd> us(rank), vs(rank);
    for (int i = 0; i < rank; ++i) {
      us[i] = first.vectors[i];
      vs[i] = second.vectors[pairing.second_for_first[i]];
      canonicalize_sign(us[i]);
      canonicalize_sign(vs[i]);
      Eigen::MatrixXd outer = us[i] * vs[i].transpose();
      K.col(i) = Eigen::Map<const Eigen::VectorXd>(outer.data(), p * q);
      // outer is column-major; vec(T) rows below use the same (j*p + i) order.
    }
    // Column-major flattening of T over (mode1, mode2): entry (i, j, c) sits
    // at row j*p + i to match K's vectorization.
    Eigen::MatrixXd M3(p * q, r);
    for (Eigen::Index i = 0; i < p; ++i) {
      for (Eigen::Index j = 0; j < q; ++j) {
        for (Eigen::Index c = 0; c < r; ++c) {
          M3(j * p + i, c) = T.data()[(i * q + j) * r + c];
        }
      }
    }
    const Eigen::MatrixXd X = K.colPivHouseholderQr().solve(M3);

    result.terms.clear();
    for (int i = 0; i < rank; ++i) {
      Rank1Term term;
      term.u = us[i];
      term.v = vs[i];
      Eigen::VectorXd c = X.row(i).transpose();
      const double norm = c.norm();
      if (norm > 0.0) {
        term.z = c / norm;
        const double flip = canonicalize_sign(term.z);
        term.weight = flip * norm;
      } else {
        term.z = Eigen::VectorXd::Unit(r, 0);
        term.weight = 0.0;
      }
      result.terms.push_back(std::move(term));
    }
    std::sort(result.terms.begin(), result.terms.end(),
              [](const Rank1Term& a, const Rank1Term& b) {
                return std::abs(a.weight) > std::abs(b.weight);
              });

    std::vector<WeightedRank1> recon;
    for (const auto& t : result.terms) {
      recon.push_back({t.weight, {t.u, t.v, t.z}});
    }
    result.diagnostics.eigengap = gap;
    result.diagnostics.residual = frobenius_distance(T, rank1_sum(recon));
    result.diagnostics.retries = attempt;
    result.diagnostics.pairing_ties = pairing.ties;
    return result;
  }

  if (degenerate_spectrum) {
    throw decomposition_error("degenerate eigenvalue spectrum after retries");
  }
  throw decomposition_error(
      "unstable complex eigenvalues after " + std::to_string(kMaxRetries) + " retries");
}

namespace {

std::size_t ipow(std::size_t base, int e) {
  std::size_t out = 1;
  for (int i = 0; i < e; ++i) out *= base;
  return out;
}

/// <u, w^(x)l> without materializing the power: repeatedly contracts the
/// trailing mode of u against w.
double contract_power(const Eigen::VectorXd& u, const Eigen::VectorXd& w, int l) {
  const auto d = static_cast<Eigen::Index>(w.size());
  Eigen::VectorXd cur = u;
  for (int t = 0; t < l; ++t) {
    const Eigen::Index rows = cur.size() / d;
    Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                                   Eigen::RowMajor>>
        m(cur.data(), rows, d);
    cur = m * w;
  }
  return cur[0];
}

}  // namespace

ExtractedDirection extract_direction(const Rank1Term& term, int d, int l1, int l2,
                                     int l3) {
  const std::size_t du = ipow(static_cast<std::size_t>(d), l1);
  const std::size_t dv = ipow(static_cast<std::size_t>(d), l2);
  const std::size_t dz = ipow(static_cast<std::size_t>(d), l3);
  if (static_cast<std::size_t>(term.u.size()) != du ||
      static_cast<std::size_t>(term.v.size()) != dv ||
      static_cast<std::size_t>(term.z.size()) != dz) {
    throw std::domain_error("extract_direction: factor lengths are not powers of d");
  }
  const int L = l1 + l2 + l3;
  const std::size_t total = du * dv * dz;
  check_tensor_size(total);

  // Assemble lambda u (x) v (x) z and matricize to d x d^(L-1); modes are all
  // of extent d, so the row-major layout is already the order-L layout.
  std::vector<double> flat(total);
  std::size_t idx = 0;
  for (std::size_t i = 0; i < du; ++i) {
    const double ui = term.weight * term.u[static_cast<Eigen::Index>(i)];
    for (std::size_t j = 0; j < dv; ++j) {
      const double uv = ui * term.v[static_cast<Eigen::Index>(j)];
      for (std::size_t c = 0; c < dz; ++c) {
        flat[idx++] = uv * term.z[static_cast<Eigen::Index>(c)];
      }
    }
  }
  RowMajorMap M(flat.data(), d, static_cast<Eigen::Index>(total / d));
  // Leading left singular pair via the d x d Gram matrix.
  const Eigen::MatrixXd gram = M * M.transpose();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(gram);
  const Eigen::VectorXd evals = es.eigenvalues();  // ascending
  const double s1 = std::sqrt(std::max(0.0, evals[d - 1]));
  const double s2 = d >= 2 ? std::sqrt(std::max(0.0, evals[d - 2])) : 0.0;
  if (s1 <= 0.0 || (s1 - s2) / s1 < 1e-8) {
    throw decomposition_error("term is not numerically rank one (singular gap " +
                              std::to_string(s1 - s2) + ")");
  }
  ExtractedDirection out;
  out.w = es.eigenvectors().col(d - 1);
  canonicalize_sign(out.w);
  out.weight = term.weight * contract_power(term.u, out.w, l1) *
               contract_power(term.v, out.w, l2) * contract_power(term.z, out.w, l3);
  out.sign_ambiguous = L % 2 == 0;
  return out;
}

}  // namespace relurec
