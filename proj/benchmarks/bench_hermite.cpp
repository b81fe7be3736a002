#include <benchmark/benchmark.h>

#include "relurec/hermite.hpp"
#include "relurec/rng.hpp"
#include "relurec/tensor.hpp"

#include <vector>

namespace {

void BM_HeEvalAll(benchmark::State& state) {
  const int k = static_cast<int>(state.range(0));
  std::vector<double> out(k + 1);
  relurec::Rng rng(1);
  double x = rng.gaussian();
  for (auto _ : state) {
    relurec::he_eval_all(k, x, out);
    benchmark::DoNotOptimize(out.data());
    x += 1e-9;  // defeat value caching
  }
}
BENCHMARK(BM_HeEvalAll)->Arg(4)->Arg(8)->Arg(16);

void BM_HeTensor(benchmark::State& state) {
  const int d = static_cast<int>(state.range(0));
  const int k = static_cast<int>(state.range(1));
  relurec::Rng rng(2);
  Eigen::VectorXd x(d);
  for (int i = 0; i < d; ++i) x[i] = rng.gaussian();
  for (auto _ : state) {
    auto t = relurec::he_tensor(k, x);
    benchmark::DoNotOptimize(t.data());
  }
}
BENCHMARK(BM_HeTensor)->Args({6, 3})->Args({6, 4})->Args({8, 4});

void BM_KhatriRao(benchmark::State& state) {
  const int rows = static_cast<int>(state.range(0));
  const int cols = static_cast<int>(state.range(1));
  relurec::Rng rng(3);
  Eigen::MatrixXd U(rows, cols), V(rows, cols);
  for (int c = 0; c < cols; ++c) {
    for (int r = 0; r < rows; ++r) {
      U(r, c) = rng.gaussian();
      V(r, c) = rng.gaussian();
    }
  }
  for (auto _ : state) {
    Eigen::MatrixXd kr = relurec::khatri_rao(U, V);
    benchmark::DoNotOptimize(kr.data());
  }
}
BENCHMARK(BM_KhatriRao)->Args({8, 5})->Args({64, 8});

}  // namespace
