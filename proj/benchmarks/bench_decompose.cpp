#include <benchmark/benchmark.h>

#include "relurec/jennrich.hpp"
#include "relurec/network.hpp"
#include "relurec/recover.hpp"
#include "relurec/rng.hpp"
#include "relurec/tensor.hpp"

namespace {

void BM_JennrichDecompose(benchmark::State& state) {
  const int d = static_cast<int>(state.range(0));
  const int k = static_cast<int>(state.range(1));
  relurec::Rng rng(5);
  std::vector<relurec::WeightedRank1> terms;
  for (int c = 0; c < k; ++c) {
    Eigen::VectorXd u(d), v(d), z(d);
    for (int i = 0; i < d; ++i) {
      u[i] = rng.gaussian();
      v[i] = rng.gaussian();
      z[i] = rng.gaussian();
    }
    terms.push_back({rng.uniform(0.5, 2.0),
                     {u.normalized(), v.normalized(), z.normalized()}});
  }
  const auto T = relurec::rank1_sum(terms);
  std::uint64_t seed = 0;
  for (auto _ : state) {
    auto dec = relurec::decompose(T, k, seed++);
    benchmark::DoNotOptimize(&dec);
  }
}
BENCHMARK(BM_JennrichDecompose)->Args({6, 3})->Args({25, 8});

void BM_RecoverParametersExact(benchmark::State& state) {
  const auto net = relurec::random_network(
      {.d = 6, .m = 3, .B = 2.0, .bias_bound = 1.0, .smin_floor = 0.4}, 7);
  const auto coeffs = relurec::exact_coefficients(net, 4);
  relurec::RecoveryConfig cfg;
  cfg.ell = 1;
  cfg.m_max = 3;
  std::uint64_t seed = 0;
  for (auto _ : state) {
    auto units = relurec::recover_parameters(coeffs, cfg, seed++);
    benchmark::DoNotOptimize(&units);
  }
  state.SetLabel("d=6 m=3 ell=1");
}
BENCHMARK(BM_RecoverParametersExact)->Unit(benchmark::kMillisecond);

}  // namespace
