#include <benchmark/benchmark.h>

#include "relurec/estimate.hpp"
#include "relurec/network.hpp"

namespace {

relurec::Dataset bench_data(int d, std::size_t n) {
  const auto net = relurec::random_network({.d = d, .m = 3, .B = 2.0}, 11);
  return relurec::sample(net, n, 17);
}

void BM_EstimateCoefficient(benchmark::State& state) {
  const int k = static_cast<int>(state.range(0));
  const auto data = bench_data(6, 1 << 16);
  for (auto _ : state) {
    auto t = relurec::estimate_coefficient(data, k);
    benchmark::DoNotOptimize(t.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(data.size()));
}
BENCHMARK(BM_EstimateCoefficient)->Arg(2)->Arg(3)->Arg(4)->Unit(benchmark::kMillisecond);

void BM_EstimateCvSet(benchmark::State& state) {
  const auto data = bench_data(6, 1 << 16);
  for (auto _ : state) {
    auto set = relurec::estimate_coefficients_cv(data, 4);
    benchmark::DoNotOptimize(&set);
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(data.size()));
}
BENCHMARK(BM_EstimateCvSet)->Unit(benchmark::kMillisecond);

}  // namespace
