#include "relurec/estimate.hpp"

#include "parallel.hpp"
#include "relurec/errors.hpp"
#include "relurec/hermite.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace relurec {

namespace {

constexpr std::size_t kBlock = 1 << 16;

struct KahanRow {
  std::vector<double> sum;
  std::vector<double> comp;
  explicit KahanRow(std::size_t n) : sum(n, 0.0), comp(n, 0.0) {}
  void add(std::size_t i, double v) {
    const double y = v - comp[i];
    const double t = sum[i] + y;
    comp[i] = (t - sum[i]) - y;
    sum[i] = t;
  }
};

}  // namespace

namespace {

struct MomentSums {
  std::vector<double> mean;     // canonical entry means
  std::vector<double> stderr_;  // filled when with_squares
};

/// Canonical-entry accumulation shared by the estimator paths. The first
/// moments go through the same Kahan/block pipeline regardless of
/// with_squares, so the tensors stay bit-identical across paths.
MomentSums accumulate_moments(const Dataset& data, int k, bool with_squares) {
  if (data.size() < 1) throw std::domain_error("estimate needs at least one sample");
  const int d = data.d;
  const auto canon = canonical_multi_indices(d, k);
  const std::size_t n_entries = canon.size();
  // Per-entry coordinate/degree pairs, e.g. (i, n_i) with n_i > 0.
  std::vector<std::vector<std::pair<int, int>>> entry_factors(n_entries);
  for (std::size_t c = 0; c < n_entries; ++c) {
    const auto counts = index_counts(canon[c], d);
    for (int i = 0; i < d; ++i) {
      if (counts[i] > 0) entry_factors[c].emplace_back(i, counts[i]);
    }
  }

  const std::size_t n_blocks = (data.size() + kBlock - 1) / kBlock;
  std::vector<std::vector<double>> block_sums(n_blocks), block_sqs(n_blocks);
  detail::parallel_blocks(n_blocks, [&](std::size_t bi) {
    KahanRow acc(n_entries);
    std::vector<double> sq(with_squares ? n_entries : 0, 0.0);
    std::vector<double> he(static_cast<std::size_t>(d) * (k + 1));
    const std::size_t begin = bi * kBlock;
    const std::size_t end = std::min(data.size(), begin + kBlock);
    for (std::size_t s = begin; s < end; ++s) {
      const double y = data.y(s);
      const double* x = data.xs.data() + s * static_cast<std::size_t>(d);
      for (int i = 0; i < d; ++i) {
        he_eval_all(k, x[i], {he.data() + static_cast<std::size_t>(i) * (k + 1),
                              static_cast<std::size_t>(k + 1)});
      }
      for (std::size_t c = 0; c < n_entries; ++c) {
        double prod = y;
        for (const auto& [coord, deg] : entry_factors[c]) {
          prod *= he[static_cast<std::size_t>(coord) * (k + 1) + deg];
        }
        acc.add(c, prod);
        if (with_squares) sq[c] += prod * prod;
      }
    }
    block_sums[bi] = std::move(acc.sum);
    if (with_squares) block_sqs[bi] = std::move(sq);
  });

  KahanRow total(n_entries);
  for (std::size_t bi = 0; bi < n_blocks; ++bi) {
    for (std::size_t c = 0; c < n_entries; ++c) total.add(c, block_sums[bi][c]);
  }
  const double n = static_cast<double>(data.size());
  MomentSums out;
  out.mean.resize(n_entries);
  for (std::size_t c = 0; c < n_entries; ++c) out.mean[c] = total.sum[c] / n;
  if (with_squares) {
    out.stderr_.resize(n_entries);
    for (std::size_t c = 0; c < n_entries; ++c) {
      double s2 = 0.0;
      for (std::size_t bi = 0; bi < n_blocks; ++bi) s2 += block_sqs[bi][c];
      const double var = std::max(0.0, s2 / n - out.mean[c] * out.mean[c]);
      out.stderr_[c] = std::sqrt(var / n);
    }
  }
  return out;
}

}  // namespace

DenseTensor estimate_coefficient(const Dataset& data, int k) {
  const auto sums = accumulate_moments(data, k, false);
  if (k == 0) return DenseTensor::scalar(sums.mean[0]);
  return symmetric_broadcast(data.d, k, sums.mean);
}

CoefficientEstimate estimate_with_stderr(const Dataset& data, int k) {
  const auto sums = accumulate_moments(data, k, true);
  CoefficientEstimate out;
  out.entry_stderr = sums.stderr_;
  if (k == 0) {
    out.tensor = DenseTensor::scalar(sums.mean[0]);
  } else {
    out.tensor = symmetric_broadcast(data.d, k, sums.mean);
  }
  return out;
}

HermiteCoefficientSet estimate_coefficients_cv(const Dataset& data, int k_max) {
  if (data.size() < 2) throw std::domain_error("estimate needs at least two samples");
  const int d = data.d;
  Dataset residual = data;  // labels shrink order by order; xs stay shared
  HermiteCoefficientSet out;
  for (int k = 0; k <= k_max; ++k) {
    const auto sums = accumulate_moments(residual, k, true);
    const auto canon = canonical_multi_indices(d, k);
    if (k == 0) {
      out.set(0, DenseTensor::scalar(sums.mean[0]));
    } else {
      out.set(k, symmetric_broadcast(d, k, sums.mean));
    }
    out.set_stderr(k, sums.stderr_);
    if (k == k_max) break;

    // r <- r - <T_k, He_k(x)> / k!, the degree-k slice of the expansion
    std::vector<std::vector<std::pair<int, int>>> entry_factors(canon.size());
    std::vector<double> scaled(canon.size());
    for (std::size_t c = 0; c < canon.size(); ++c) {
      const auto counts = index_counts(canon[c], d);
      for (int i = 0; i < d; ++i) {
        if (counts[i] > 0) entry_factors[c].emplace_back(i, counts[i]);
      }
      scaled[c] = sums.mean[c] * multi_index_multiplicity(canon[c], d) / factorial(k);
    }
    const std::size_t n_blocks = (residual.size() + kBlock - 1) / kBlock;
    detail::parallel_blocks(n_blocks, [&](std::size_t bi) {
      std::vector<double> he(static_cast<std::size_t>(d) * (k + 1));
      const std::size_t begin = bi * kBlock;
      const std::size_t end = std::min(residual.size(), begin + kBlock);
      for (std::size_t s = begin; s < end; ++s) {
        const double* x = residual.xs.data() + s * static_cast<std::size_t>(d);
        for (int i = 0; i < d; ++i) {
          he_eval_all(k, x[i], {he.data() + static_cast<std::size_t>(i) * (k + 1),
                                static_cast<std::size_t>(k + 1)});
        }
        double q = 0.0;
        for (std::size_t c = 0; c < canon.size(); ++c) {
          double prod = scaled[c];
          for (const auto& [coord, deg] : entry_factors[c]) {
            prod *= he[static_cast<std::size_t>(coord) * (k + 1) + deg];
          }
          q += prod;
        }
        residual.ys[s] -= q;
      }
    });
  }
  return out;
}

double frobenius_error_from_stderr(int d, int k, std::span<const double> entry_stderr) {
  const auto canon = canonical_multi_indices(d, k);
  double total = 0.0;
  for (std::size_t c = 0; c < canon.size(); ++c) {
    total += multi_index_multiplicity(canon[c], d) * entry_stderr[c] * entry_stderr[c];
  }
  return std::sqrt(total);
}

double estimate_error_estimate(const Dataset& data, int k) {
  if (data.size() < 2) throw std::domain_error("error estimate needs two samples");
  const auto est = estimate_with_stderr(data, k);
  return frobenius_error_from_stderr(data.d, k, est.entry_stderr);
}

EstimateReport estimate_with_report(const Dataset& data, int k, const ReluNetwork* truth) {
  EstimateReport rep;
  rep.k = k;
  rep.N = data.size();
  auto est = estimate_with_stderr(data, k);
  rep.tensor = std::move(est.tensor);
  rep.entry_stderr = std::move(est.entry_stderr);
  rep.frobenius_error_estimate =
      frobenius_error_from_stderr(data.d, k, rep.entry_stderr);
  if (truth != nullptr) {
    rep.frobenius_error_vs_exact =
        frobenius_distance(rep.tensor, exact_hermite_coeff(*truth, k));
  }
  return rep;
}

std::vector<ConvergencePoint> convergence_curve(const ReluNetwork& net, int k,
                                                std::span<const std::size_t> Ns,
                                                std::span<const std::uint64_t> seeds) {
  if (Ns.empty()) throw std::domain_error("convergence_curve: empty N list");
  if (!std::is_sorted(Ns.begin(), Ns.end())) {
    throw std::domain_error("convergence_curve: N list must be ascending");
  }
  const DenseTensor exact = exact_hermite_coeff(net, k);
  std::vector<std::vector<double>> errors(Ns.size());
  for (std::uint64_t seed : seeds) {
    const Dataset data = sample(net, Ns.back(), seed);
    for (std::size_t j = 0; j < Ns.size(); ++j) {
      const Dataset prefix = data.slice(0, Ns[j]);
      errors[j].push_back(frobenius_distance(estimate_coefficient(prefix, k), exact));
    }
  }
  std::vector<ConvergencePoint> curve(Ns.size());
  for (std::size_t j = 0; j < Ns.size(); ++j) {
    auto& e = errors[j];
    std::sort(e.begin(), e.end());
    const std::size_t n = e.size();
    curve[j].N = Ns[j];
    curve[j].median_error = n % 2 == 1 ? e[n / 2] : 0.5 * (e[n / 2 - 1] + e[n / 2]);
  }
  return curve;
}

double fitted_loglog_slope(const std::vector<ConvergencePoint>& curve) {
  if (curve.size() < 2) throw std::domain_error("need at least two points for a slope");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double n = static_cast<double>(curve.size());
  for (const auto& p : curve) {
    const double x = std::log(static_cast<double>(p.N));
    const double y = std::log(p.median_error);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace relurec
