#pragma once

#include "relurec/network.hpp"
#include "relurec/tensor.hpp"

#include <cstdint>

namespace relurec {

/// Monte-Carlo estimate of E[f(x) He_k(x)] with per-entry standard errors
/// from block means. Independent of the closed-form coefficient path; used
/// to check it.
struct McTensorEstimate {
  DenseTensor mean;
  DenseTensor stderr_;
  std::size_t N = 0;
  std::size_t blocks = 0;
};

McTensorEstimate mc_hermite_coeff(const ReluNetwork& net, int k, std::size_t N,
                                  std::uint64_t seed);

/// Deterministic 1-d path: E[f(x) He_k(x)] by panel quadrature with the
/// integrand split at each unit's kink. Only for d = 1.
double quadrature_hermite_coeff_1d(const ReluNetwork& net, int k);

}  // namespace relurec
