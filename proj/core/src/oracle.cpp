#include "relurec/oracle.hpp"

#include "relurec/hermite.hpp"
#include "relurec/quadrature.hpp"
#include "relurec/rng.hpp"

#include <cmath>
#include <stdexcept>

namespace relurec {

McTensorEstimate mc_hermite_coeff(const ReluNetwork& net, int k, std::size_t N,
                                  std::uint64_t seed) {
  net.validate();
  if (N < 100) throw std::domain_error("mc_hermite_coeff: too few samples");
  const int d = net.d;
  const auto canon = canonical_multi_indices(d, k);
  const std::size_t n_entries = canon.size();
  std::vector<std::vector<std::pair<int, int>>> entry_factors(n_entries);
  for (std::size_t c = 0; c < n_entries; ++c) {
    const auto counts = index_counts(canon[c], d);
    for (int i = 0; i < d; ++i) {
      if (counts[i] > 0) entry_factors[c].emplace_back(i, counts[i]);
    }
  }

  const std::size_t n_blocks = 50;
  const std::size_t per_block = N / n_blocks;
  std::vector<std::vector<double>> block_means(n_blocks,
                                               std::vector<double>(n_entries, 0.0));
  Rng rng(derive_seed(seed, "mc-oracle"));
  Eigen::VectorXd x(d);
  std::vector<double> he(static_cast<std::size_t>(d) * (k + 1));
  for (std::size_t b = 0; b < n_blocks; ++b) {
    auto& mean = block_means[b];
    for (std::size_t s = 0; s < per_block; ++s) {
      for (int i = 0; i < d; ++i) x[i] = rng.gaussian();
      const double y = evaluate(net, x);
      for (int i = 0; i < d; ++i) {
        he_eval_all(k, x[i], {he.data() + static_cast<std::size_t>(i) * (k + 1),
                              static_cast<std::size_t>(k + 1)});
      }
      for (std::size_t c = 0; c < n_entries; ++c) {
        double prod = y;
        for (const auto& [coord, deg] : entry_factors[c]) {
          prod *= he[static_cast<std::size_t>(coord) * (k + 1) + deg];
        }
        mean[c] += prod;
      }
    }
    for (auto& v : mean) v /= static_cast<double>(per_block);
  }

  std::vector<double> mean(n_entries, 0.0), se(n_entries, 0.0);
  for (std::size_t c = 0; c < n_entries; ++c) {
    for (std::size_t b = 0; b < n_blocks; ++b) mean[c] += block_means[b][c];
    mean[c] /= static_cast<double>(n_blocks);
    double var = 0.0;
    for (std::size_t b = 0; b < n_blocks; ++b) {
      const double diff = block_means[b][c] - mean[c];
      var += diff * diff;
    }
    var /= static_cast<double>(n_blocks - 1);
    se[c] = std::sqrt(var / static_cast<double>(n_blocks));
  }

  McTensorEstimate out;
  out.N = per_block * n_blocks;
  out.blocks = n_blocks;
  out.mean = symmetric_broadcast(d, k, mean);
  out.stderr_ = symmetric_broadcast(d, k, se);
  return out;
}

double quadrature_hermite_coeff_1d(const ReluNetwork& net, int k) {
  if (net.d != 1) throw std::domain_error("quadrature path requires d = 1");
  std::vector<double> kinks;
  for (int i = 0; i < net.m; ++i) {
    // w x + b = 0 at x = -b / w with w = +-1 after normalization
    kinks.push_back(-net.b[i] / net.W(0, i));
  }
  auto g = [&](double z) {
    Eigen::VectorXd x(1);
    x[0] = z;
    return evaluate(net, x) * he_eval(k, z);
  };
  return gaussian_expectation(g, 0.0, kinks, 14.0, 256);
}

}  // namespace relurec
