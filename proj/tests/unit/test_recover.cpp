#include <doctest.h>

#include "relurec/errors.hpp"
#include "relurec/estimate.hpp"
#include "relurec/hermite.hpp"
#include "relurec/match.hpp"
#include "relurec/recover.hpp"
#include "relurec/rng.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <numbers>

using namespace relurec;

namespace {

const double kSqrt2Pi = std::sqrt(2.0 * std::numbers::pi);

ReluNetwork make_net(const Eigen::MatrixXd& W, const Eigen::VectorXd& a,
                     const Eigen::VectorXd& b) {
  ReluNetwork net;
  net.d = static_cast<int>(W.rows());
  net.m = static_cast<int>(W.cols());
  net.a = a;
  net.b = b;
  net.W = W;
  net.B = 4.0;
  return net;
}

Eigen::MatrixXd random_columns(int d, int m, std::uint64_t seed) {
  Rng rng(seed);
  Eigen::MatrixXd W(d, m);
  for (int c = 0; c < m; ++c) {
    for (int r = 0; r < d; ++r) W(r, c) = rng.gaussian();
    W.col(c).normalize();
  }
  return W;
}

double direction_error(const Eigen::VectorXd& w, const Eigen::VectorXd& w_hat) {
  return std::min((w - w_hat).norm(), (w + w_hat).norm());
}

}  // namespace

TEST_SUITE_BEGIN("recover");

TEST_CASE("directions come out of both tensors and are stitched") {
  // b = 0 makes He_1(b) = 0, so unit 0 is invisible in T_3 and must be
  // recovered from T_4; the other units typically show up in both and the
  // duplicates have to merge.
  const Eigen::MatrixXd W = random_columns(4, 3, 7);
  Eigen::VectorXd a(3), b(3);
  a << 1.0, -1.5, 0.8;
  b << 0.0, 0.5, -0.5;
  const ReluNetwork net = make_net(W, a, b);
  const auto coeffs = exact_coefficients(net, 4);

  RecoveryConfig cfg;
  cfg.ell = 1;
  cfg.m_max = 3;
  const auto dirs = recover_directions(coeffs.at(3), coeffs.at(4), cfg, 11);
  REQUIRE(dirs.size() == 3);
  for (int i = 0; i < 3; ++i) {
    double best = 1e300;
    for (const auto& cand : dirs) best = std::min(best, direction_error(W.col(i), cand.w));
    CHECK(best <= 1e-8);
  }
  // the b = 0 unit can only name the even tensor as its source
  bool saw_even_only = false;
  for (const auto& cand : dirs) {
    if (direction_error(W.col(0), cand.w) <= 1e-6) {
      CHECK(cand.weight_even.has_value());
      CHECK(!cand.weight_odd.has_value());
      saw_even_only = true;
    }
  }
  CHECK(saw_even_only);
}

TEST_CASE("raising the prune threshold never adds units") {
  const Eigen::MatrixXd W = random_columns(4, 3, 13);
  Eigen::VectorXd a(3), b(3);
  a << 1.2, -0.7, 1.9;
  b << 0.1, 0.6, -0.9;
  const ReluNetwork net = make_net(W, a, b);
  const auto coeffs = exact_coefficients(net, 4);
  RecoveryConfig cfg;
  cfg.ell = 1;
  cfg.m_max = 3;
  std::size_t last = 99;
  for (double eta2 : {1e-6, 1e-3, 1e-2, 0.1, 1.0}) {
    cfg.eta2 = eta2;
    const auto dirs = recover_directions(coeffs.at(3), coeffs.at(4), cfg, 17);
    CHECK(dirs.size() <= last);
    last = dirs.size();
  }
}

TEST_CASE("scalar recovery, order one") {
  Eigen::MatrixXd W = random_columns(3, 1, 19);
  Eigen::VectorXd a(1), b(1);
  a << 1.0;
  b << 0.0;
  const ReluNetwork net = make_net(W, a, b);
  const auto coeffs = exact_coefficients(net, 4);

  RecoveryConfig cfg;
  cfg.ell = 1;
  cfg.m_max = 1;
  const auto units = recover_scalars({W.col(0)}, coeffs, cfg);
  REQUIRE(units.size() == 1);
  CHECK(units[0].scalars_ok);
  CHECK(units[0].b == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(units[0].a == doctest::Approx(1.0).epsilon(1e-12));

  SUBCASE("flipped direction flips b and keeps a") {
    Eigen::VectorXd bb(1);
    bb << 0.45;
    const ReluNetwork net2 = make_net(W, a, bb);
    const auto c2 = exact_coefficients(net2, 4);
    const auto flipped = recover_scalars({-W.col(0)}, c2, cfg);
    REQUIRE(flipped.size() == 1);
    CHECK(flipped[0].b == doctest::Approx(-0.45).epsilon(1e-10));
    CHECK(flipped[0].a == doctest::Approx(1.0).epsilon(1e-10));
  }
}

TEST_CASE("scalar recovery, higher order") {
  Eigen::MatrixXd W = random_columns(3, 1, 23);
  Eigen::VectorXd a(1), b(1);
  a << 1.5;
  b << 0.5;
  const ReluNetwork net = make_net(W, a, b);
  const auto coeffs = exact_coefficients(net, 6);

  RecoveryConfig cfg;
  cfg.ell = 2;
  cfg.m_max = 1;
  const auto units = recover_scalars({W.col(0)}, coeffs, cfg);
  REQUIRE(units.size() == 1);
  CHECK(units[0].a == doctest::Approx(1.5).epsilon(1e-10));
  CHECK(units[0].b == doctest::Approx(0.5).epsilon(1e-10));
}

TEST_CASE("the recurrence multiplier is the Hermite degree") {
  // Round trip b -> gamma -> b directly at the scalar level, pinning the
  // convention: gamma_k = (-1)^k beta He_k(b), q in {ell-1, ell},
  // b = -(gamma_{q+1} + q gamma_{q-1}) / gamma_q.
  for (int ell = 2; ell <= 4; ++ell) {
    for (double b = -3.0; b <= 3.0 + 1e-9; b += 0.25) {
      const double beta = 0.8;  // a exp(-b^2/2)/sqrt(2 pi), value irrelevant
      auto gamma = [&](int k) {
        return (k % 2 == 0 ? 1.0 : -1.0) * beta * he_eval(k, b);
      };
      const int q =
          std::abs(gamma(ell - 1)) >= std::abs(gamma(ell)) ? ell - 1 : ell;
      REQUIRE(std::abs(gamma(q)) > 1e-12);
      const double recovered = -(gamma(q + 1) + q * gamma(q - 1)) / gamma(q);
      CHECK(recovered == doctest::Approx(b).epsilon(1e-12));
    }
  }
}

TEST_CASE("sign fixing in the full-rank setting") {
  Eigen::MatrixXd W = random_columns(4, 1, 29);
  Eigen::VectorXd a(1), b(1);
  a << 1.3;
  b << 0.6;
  const ReluNetwork net = make_net(W, a, b);
  const Eigen::VectorXd T1 = to_vector(exact_hermite_coeff(net, 1));

  SUBCASE("flipped unit is flipped back") {
    RecoveredUnit u;
    u.a = 1.3;
    u.b = -0.6;
    u.w = -W.col(0);
    const auto fixed = fix_signs({u}, T1);
    REQUIRE(fixed[0].sign_resolved.has_value());
    CHECK(*fixed[0].sign_resolved == -1);
    CHECK(fixed[0].b == doctest::Approx(0.6));
    CHECK((fixed[0].w - W.col(0)).norm() <= 1e-10);
  }

  SUBCASE("correct unit is left alone") {
    RecoveredUnit u;
    u.a = 1.3;
    u.b = 0.6;
    u.w = W.col(0);
    const auto fixed = fix_signs({u}, T1);
    REQUIRE(fixed[0].sign_resolved.has_value());
    CHECK(*fixed[0].sign_resolved == 1);
    CHECK(fixed[0].b == doctest::Approx(0.6));
  }
}

TEST_CASE("full-rank signs across random instances") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const ReluNetwork net = random_network(
        {.d = 5, .m = 3, .B = 2.0, .bias_bound = 1.2, .smin_floor = 0.25}, 500 + seed);
    const auto coeffs = exact_coefficients(net, 4);
    RecoveryConfig cfg;
    cfg.ell = 1;
    cfg.m_max = 3;
    const auto units = recover_parameters(coeffs, cfg, seed);
    REQUIRE(units.size() == 3);
    const auto report = match_units(net, units);
    REQUIRE(report.matches.size() == 3);
    for (const auto& m : report.matches) {
      CHECK(m.cost <= 1e-6);
      CHECK(m.sign == 1);  // signs were resolved, so no flip is needed
    }
  }
}

TEST_CASE("full composition on exact coefficients") {
  SUBCASE("full-rank d=8 m=5") {
    for (std::uint64_t seed = 0; seed < 3; ++seed) {
      const ReluNetwork net = random_network(
          {.d = 8, .m = 5, .B = 2.0, .bias_bound = 1.5, .smin_floor = 0.2}, 42 + seed);
      const auto coeffs = exact_coefficients(net, 4);
      RecoveryConfig cfg;
      cfg.ell = 1;
      cfg.m_max = 5;
      const auto units = recover_parameters(coeffs, cfg, seed);
      REQUIRE(units.size() == 5);
      const auto report = match_units(net, units);
      REQUIRE(report.matches.size() == 5);
      for (const auto& m : report.matches) {
        CHECK(m.w_error <= 1e-6);
        CHECK(m.b_error <= 1e-6);
        CHECK(m.a_error <= 1e-6);
      }
    }
  }

  SUBCASE("overcomplete ell=2 d=5 m=8") {
    const ReluNetwork net = random_network(
        {.d = 5, .m = 8, .B = 2.0, .bias_bound = 1.5, .smin_floor = 0.05, .ell = 2}, 4242);
    const auto coeffs = exact_coefficients(net, 6);
    RecoveryConfig cfg;
    cfg.ell = 2;
    cfg.m_max = 8;
    const auto units = recover_parameters(coeffs, cfg, 9);
    REQUIRE(units.size() == 8);
    const auto report = match_units(net, units);
    REQUIRE(report.matches.size() == 8);
    for (const auto& m : report.matches) {
      CHECK(m.w_error <= 1e-5);
      CHECK(m.b_error <= 1e-5);
      CHECK(m.a_error <= 1e-5);
    }
  }

  SUBCASE("empty network yields an empty result") {
    ReluNetwork net;
    net.d = 3;
    net.m = 0;
    net.a.resize(0);
    net.b.resize(0);
    net.W.resize(3, 0);
    const auto coeffs = exact_coefficients(net, 4);
    RecoveryConfig cfg;
    cfg.ell = 1;
    cfg.m_max = 1;
    CHECK(recover_parameters(coeffs, cfg, 1).empty());
  }
}

TEST_CASE("sampled recovery covers the good set at desk scale") {
  const ReluNetwork net = random_network(
      {.d = 4, .m = 3, .B = 2.0, .bias_bound = 1.0, .smin_floor = 0.3}, 77);
  const Dataset data = sample(net, 200'000, 78);
  // variance-reduced estimates with per-entry noise, as the pipeline runs it
  const HermiteCoefficientSet coeffs = estimate_coefficients_cv(data, 4);
  RecoveryConfig cfg;
  cfg.ell = 1;
  cfg.m_max = 3;
  cfg.eta0 = frobenius_error_from_stderr(net.d, 4, *coeffs.stderr_for(4));
  const auto units = recover_parameters(coeffs, cfg, 79);
  const auto report = match_units(net, units);
  // every |b| <= 1 unit is in the good set here; all must be matched
  CHECK(report.unmatched_true.empty());
  for (const auto& m : report.matches) CHECK(m.cost <= 0.2);
}

TEST_CASE("conditioning guards") {
  Eigen::MatrixXd W = random_columns(3, 1, 31);
  const ReluNetwork net = make_net(W, Eigen::VectorXd::Ones(1), Eigen::VectorXd::Zero(1));
  const auto coeffs = exact_coefficients(net, 4);
  RecoveryConfig cfg;
  cfg.ell = 1;
  cfg.m_max = 2;
  // duplicated direction makes the power matrix singular
  CHECK_THROWS_AS(recover_scalars({W.col(0), W.col(0)}, coeffs, cfg), conditioning_error);
}

TEST_SUITE_END();
