#include <doctest.h>

#include "relurec/dataset.hpp"
#include "relurec/hermite.hpp"
#include "relurec/network.hpp"
#include "relurec/oracle.hpp"
#include "relurec/rng.hpp"

#include <cmath>
#include <filesystem>
#include <numbers>

using namespace relurec;

namespace {

ReluNetwork single_unit(int d, double a, double b, const Eigen::VectorXd& w) {
  ReluNetwork net;
  net.d = d;
  net.m = 1;
  net.B = std::max({1.0, std::abs(a), 1.0 / std::abs(a), std::abs(b)});
  net.a = Eigen::VectorXd::Constant(1, a);
  net.b = Eigen::VectorXd::Constant(1, b);
  net.W = w;
  return net;
}

// Straightforward re-implementation used as the evaluation oracle.
double eval_oracle(const ReluNetwork& net, const Eigen::VectorXd& x) {
  double total = 0.0;
  for (int i = 0; i < net.m; ++i) {
    double z = net.b[i];
    for (int j = 0; j < net.d; ++j) z += net.W(j, i) * x[j];
    total += net.a[i] * (z > 0 ? z : 0);
  }
  return total;
}

}  // namespace

TEST_SUITE_BEGIN("network");

TEST_CASE("evaluation matches the direct formula") {
  const Eigen::VectorXd e1 = Eigen::VectorXd::Unit(3, 0);
  const ReluNetwork net = single_unit(3, 1.0, 0.0, e1);
  CHECK(evaluate(net, e1) == 1.0);
  CHECK(evaluate(net, -e1) == 0.0);

  Rng rng(5);
  const ReluNetwork randnet = random_network({.d = 5, .m = 3, .B = 2.0}, 99);
  for (int trial = 0; trial < 100; ++trial) {
    Eigen::VectorXd x(5);
    for (int i = 0; i < 5; ++i) x[i] = rng.gaussian();
    CHECK(evaluate(randnet, x) == doctest::Approx(eval_oracle(randnet, x)));
  }
}

TEST_CASE("sampling: determinism and Gaussian moments") {
  const ReluNetwork net = random_network({.d = 3, .m = 2}, 7);
  CHECK_THROWS_AS(sample(net, 0, 1), std::domain_error);

  const Dataset a = sample(net, 1000, 42);
  const Dataset b = sample(net, 1000, 42);
  CHECK(a.xs == b.xs);
  CHECK(a.ys == b.ys);
  const Dataset c = sample(net, 1000, 43);
  CHECK(a.xs != c.xs);

  const std::size_t N = 1'000'000;
  const Dataset big = sample(net, N, 4242);
  for (int j = 0; j < 3; ++j) {
    double mean = 0.0;
    for (std::size_t i = 0; i < N; ++i) mean += big.xs[i * 3 + j];
    mean /= static_cast<double>(N);
    CHECK(std::abs(mean) <= 4.0 / std::sqrt(static_cast<double>(N)));
  }
  for (int j = 0; j < 3; ++j) {
    for (int k = j; k < 3; ++k) {
      double cov = 0.0;
      for (std::size_t i = 0; i < N; ++i) cov += big.xs[i * 3 + j] * big.xs[i * 3 + k];
      cov /= static_cast<double>(N);
      CHECK(std::abs(cov - (j == k ? 1.0 : 0.0)) <= 0.01);
    }
  }
  for (std::size_t i = 0; i < 100; ++i) {
    CHECK(big.ys[i] == evaluate(net, big.x(i)));
  }
}

TEST_CASE("closed-form moment tensors") {
  const Eigen::VectorXd e1 = Eigen::VectorXd::Unit(2, 0);
  const ReluNetwork unit = single_unit(2, 1.0, 0.0, e1);
  const double inv_sqrt_2pi = 1.0 / std::sqrt(2.0 * std::numbers::pi);
  CHECK(exact_hermite_coeff(unit, 0)[0] == doctest::Approx(inv_sqrt_2pi).epsilon(1e-15));
  CHECK(exact_hermite_coeff(unit, 3).frobenius_norm() == doctest::Approx(0.0));

  // d = 1 oracle pair: Monte Carlo and quadrature agree with the formula
  Eigen::VectorXd one = Eigen::VectorXd::Ones(1);
  const ReluNetwork scalar_net = single_unit(1, 1.0, 0.7, one);
  const DenseTensor exact2 = exact_hermite_coeff(scalar_net, 2);
  const auto mc = mc_hermite_coeff(scalar_net, 2, 10'000'000, 11);
  CHECK(std::abs(mc.mean[0] - exact2[0]) <= 5.0 * mc.stderr_[0]);
  CHECK(quadrature_hermite_coeff_1d(scalar_net, 2) ==
        doctest::Approx(exact2[0]).epsilon(1e-9));

  // order-k coefficient tensors are symmetric by construction
  const ReluNetwork net = random_network({.d = 3, .m = 2, .bias_bound = 1.0}, 3);
  const DenseTensor t3 = exact_hermite_coeff(net, 3);
  CHECK(t3.at({0, 1, 2}) == t3.at({2, 1, 0}));
  CHECK(t3.at({0, 0, 1}) == t3.at({1, 0, 0}));

  // zero-bias networks kill every odd coefficient of order >= 3
  ReluNetwork nobias = net;
  nobias.b.setZero();
  CHECK(exact_hermite_coeff(nobias, 3).frobenius_norm() == 0.0);
  CHECK(exact_hermite_coeff(nobias, 5).frobenius_norm() == 0.0);
  CHECK(exact_hermite_coeff(nobias, 4).frobenius_norm() > 0.0);
}

TEST_CASE("smoothed instances") {
  const ReluNetwork base =
      random_network({.d = 5, .m = 8, .smin_floor = 0.0, .ell = 2}, 21);
  CHECK_THROWS_AS(smoothed_instance({base, 0.0, 2, 1}), std::domain_error);

  // tiny tau keeps the base network
  const auto nearly = smoothed_instance({base, 1e-10, 2, 5});
  CHECK((nearly.net.W - base.W).norm() <= 1e-9);

  const auto once = smoothed_instance({base, 0.1, 2, 5});
  const auto again = smoothed_instance({base, 0.1, 2, 5});
  CHECK((once.net.W - again.net.W).norm() == 0.0);

  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto inst = smoothed_instance({base, 0.1, 2, seed});
    CHECK(inst.smin_khatri_rao > 0.0);
    inst.net.validate();  // columns re-normalized, rescale folded into a and b
  }

  // bound violations are reported, never clamped
  ReluNetwork snug = base;
  snug.B = std::max({1.0, snug.a.cwiseAbs().maxCoeff(), snug.b.cwiseAbs().maxCoeff(),
                     snug.W.cwiseAbs().maxCoeff()});
  for (int i = 0; i < snug.m; ++i) {
    snug.B = std::max(snug.B, 1.0 / std::abs(snug.a[i]));
  }
  CHECK(check_bounds(snug).empty());
  const auto pushed = smoothed_instance({snug, 2.0, 2, 3});  // huge tau rescales a
  CHECK_FALSE(check_bounds(pushed.net).empty());
  CHECK(pushed.bound_violations == check_bounds(pushed.net));
}

TEST_CASE("sign-flip pair built from a linear dependency") {
  Eigen::MatrixXd w(2, 3);
  w.col(0) = Eigen::Vector2d(1, 0);
  w.col(1) = Eigen::Vector2d(0, 1);
  w.col(2) = -Eigen::Vector2d(1, 1).normalized();
  const auto [f, g] = nonidentifiable_pair(w);
  Rng rng(17);
  for (int trial = 0; trial < 1000; ++trial) {
    Eigen::VectorXd x(2);
    x << rng.gaussian(), rng.gaussian();
    CHECK(std::abs(evaluate(f, x) - evaluate(g, x)) <= 1e-9);
  }

  // antiparallel pair: relu(z) - relu(-z) = z on both sides
  Eigen::MatrixXd anti(2, 2);
  anti.col(0) = Eigen::Vector2d(1, 0);
  anti.col(1) = Eigen::Vector2d(-1, 0);
  const auto [fa, ga] = nonidentifiable_pair(anti);
  for (int trial = 0; trial < 100; ++trial) {
    Eigen::VectorXd x(2);
    x << rng.gaussian(), rng.gaussian();
    CHECK(std::abs(evaluate(fa, x) - evaluate(ga, x)) <= 1e-9);
  }

  // numerically independent directions are rejected
  Eigen::MatrixXd indep(3, 2);
  indep.col(0) = Eigen::Vector3d(1, 0, 0);
  indep.col(1) = Eigen::Vector3d(0, 1, 0);
  CHECK_THROWS_AS(nonidentifiable_pair(indep), std::domain_error);
}

TEST_CASE("truncated risk decomposition tracks the Monte-Carlo risk") {
  Rng seeds(23);
  for (int trial = 0; trial < 3; ++trial) {
    const ReluNetwork f =
        random_network({.d = 2, .m = 2, .B = 1.5, .bias_bound = 1.0}, 100 + trial);
    const ReluNetwork g =
        random_network({.d = 2, .m = 2, .B = 1.5, .bias_bound = 1.0}, 200 + trial);
    const auto risk = truncated_hermite_risk(f, g, 14);
    const auto mc = mc_squared_distance(f, g, 1'000'000, 300 + trial);
    const double tol = std::max(0.02 * mc.mse, 5.0 * mc.stderr_);
    CHECK(std::abs(risk.risk - mc.mse) <= tol + risk.last_term);
  }
}

TEST_CASE("network JSON round trip") {
  const ReluNetwork net = random_network({.d = 4, .m = 3, .B = 2.0}, 77);
  const auto path = std::filesystem::temp_directory_path() / "relurec_net_test.json";
  save_network(path, net);
  const ReluNetwork back = load_network(path);
  CHECK(back.d == net.d);
  CHECK(back.m == net.m);
  CHECK(back.B == net.B);
  CHECK((back.a - net.a).norm() == 0.0);
  CHECK((back.b - net.b).norm() == 0.0);
  CHECK((back.W - net.W).norm() == 0.0);
  std::filesystem::remove(path);
}

TEST_CASE("generator respects its constraints") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const ReluNetwork net =
        random_network({.d = 4, .m = 3, .B = 2.0, .bias_bound = 1.5, .smin_floor = 0.2}, seed);
    net.validate();
    CHECK(check_bounds(net).empty());
    for (int i = 0; i < net.m; ++i) {
      CHECK(std::abs(net.a[i]) >= 0.5);
      CHECK(std::abs(net.a[i]) <= 2.0);
      CHECK(std::abs(net.b[i]) <= 1.5);
    }
    CHECK(singular_values(net.W).minCoeff() >= 0.2);
  }
}

TEST_SUITE_END();
