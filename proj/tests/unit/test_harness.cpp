#include <doctest.h>

#include "relurec/errors.hpp"
#include "relurec/hermite.hpp"
#include "relurec/match.hpp"
#include "relurec/oracle.hpp"
#include "relurec/pipeline.hpp"
#include "relurec/rng.hpp"
#include "relurec/verify.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>

using namespace relurec;
namespace fs = std::filesystem;

namespace {

std::vector<RecoveredUnit> units_of(const ReluNetwork& net) {
  std::vector<RecoveredUnit> out;
  for (int i = 0; i < net.m; ++i) {
    RecoveredUnit u;
    u.a = net.a[i];
    u.b = net.b[i];
    u.w = net.W.col(i);
    out.push_back(std::move(u));
  }
  return out;
}

double brute_force_assignment(const Eigen::MatrixXd& cost) {
  std::vector<int> perm(cost.rows());
  std::iota(perm.begin(), perm.end(), 0);
  double best = 1e300;
  do {
    double total = 0.0;
    for (int i = 0; i < cost.rows(); ++i) total += cost(i, perm[i]);
    best = std::min(best, total);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

}  // namespace

TEST_SUITE_BEGIN("harness");

TEST_CASE("matching: exact, flipped, and perturbed") {
  const ReluNetwork net = random_network({.d = 4, .m = 3, .B = 2.0}, 3);

  auto exact = units_of(net);
  const auto r1 = match_units(net, exact);
  REQUIRE(r1.matches.size() == 3);
  CHECK(r1.total_cost <= 1e-12);
  for (const auto& m : r1.matches) CHECK(m.true_index == m.recovered_index);

  auto flipped = units_of(net);
  for (auto& u : flipped) {
    u.b = -u.b;
    u.w = -u.w;
  }
  const auto r2 = match_units(net, flipped);
  CHECK(r2.total_cost <= 1e-12);
  for (const auto& m : r2.matches) CHECK(m.sign == -1);

  Rng rng(7);
  auto bumped = units_of(net);
  std::rotate(bumped.begin(), bumped.begin() + 1, bumped.end());
  for (auto& u : bumped) {
    Eigen::VectorXd dw(4);
    for (int i = 0; i < 4; ++i) dw[i] = rng.gaussian();
    u.w = (u.w + 1e-3 * dw.normalized()).normalized();
    u.b += 1e-3 * rng.uniform(-1.0, 1.0);
    u.a += 1e-3 * rng.uniform(-1.0, 1.0);
  }
  const auto r3 = match_units(net, bumped);
  CHECK(r3.total_cost <= 3 * net.m * 1e-3 * (1.0 + net.B));
  CHECK(r3.unmatched_true.empty());
  CHECK(r3.unmatched_recovered.empty());
}

TEST_CASE("assignment is optimal and handles rectangles") {
  Rng rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 2 + static_cast<int>(rng.uniform_index(5));
    Eigen::MatrixXd cost(n, n);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) cost(i, j) = rng.uniform(0.0, 10.0);
    }
    const auto assign = hungarian_assignment(cost);
    double total = 0.0;
    for (int i = 0; i < n; ++i) total += cost(i, assign[i]);
    CHECK(total == doctest::Approx(brute_force_assignment(cost)).epsilon(1e-12));
  }

  Eigen::MatrixXd wide(2, 4);
  wide << 5, 1, 9, 9,
          9, 9, 9, 2;
  const auto a = hungarian_assignment(wide);
  CHECK(a[0] == 1);
  CHECK(a[1] == 3);

  Eigen::MatrixXd tall = wide.transpose();
  const auto b = hungarian_assignment(tall);
  int assigned = 0;
  for (int v : b) assigned += v >= 0 ? 1 : 0;
  CHECK(assigned == 2);
}

TEST_CASE("monte-carlo oracle agrees with the closed form in 1-d") {
  Eigen::VectorXd one = Eigen::VectorXd::Ones(1);
  for (double b : {-1.0, 0.0, 0.3, 2.0}) {
    ReluNetwork net;
    net.d = 1;
    net.m = 1;
    net.B = 4.0;
    net.a = Eigen::VectorXd::Constant(1, 1.0);
    net.b = Eigen::VectorXd::Constant(1, b);
    net.W = one;
    for (int k = 0; k <= 6; ++k) {
      const auto mc = mc_hermite_coeff(net, k, 400'000, 17);
      const double exact = exact_hermite_coeff(net, k)[0];
      CHECK(std::abs(mc.mean[0] - exact) <= 5.0 * std::max(mc.stderr_[0], 1e-12));
      const double quad = quadrature_hermite_coeff_1d(net, k);
      CHECK(std::abs(mc.mean[0] - quad) <= 5.0 * std::max(mc.stderr_[0], 1e-12));
    }
  }

  // identically zero function from cancelling units
  Eigen::MatrixXd W(1, 2);
  W << 1.0, 1.0;
  ReluNetwork zero;
  zero.d = 1;
  zero.m = 2;
  zero.B = 1.0;
  zero.a = Eigen::VectorXd::Ones(2);
  zero.a[1] = -1.0;
  zero.b = Eigen::VectorXd::Zero(2);
  zero.W = W;
  const auto mc0 = mc_hermite_coeff(zero, 0, 100'000, 5);
  CHECK(mc0.mean[0] == 0.0);
}

TEST_CASE("lemma suites pass, and a corrupted evaluator is caught") {
  VerifyOptions quick;
  quick.orthogonality_samples = 200'000;
  quick.grid_step = 0.05;
  const auto results = verify_lemmas(quick);
  CHECK(all_passed(results));
  REQUIRE(results.size() >= 8);

  // Turan value at x = 0, k = 1: He_2^2 - He_1 He_3 = 1
  CHECK(he_eval(2, 0.0) * he_eval(2, 0.0) - he_eval(1, 0.0) * he_eval(3, 0.0) == 1.0);

  VerifyOptions corrupted = quick;
  corrupted.he = [](int k, double x) {
    return k >= 5 ? 0.05 * he_eval(k, x) : he_eval(k, x);
  };
  const auto bad = verify_lemmas(corrupted);
  CHECK_FALSE(all_passed(bad));
  bool roots_failed = false;
  for (const auto& r : bad) {
    if (r.name == "root-separation" && !r.passed) roots_failed = true;
  }
  CHECK(roots_failed);
}

TEST_CASE("config parsing is strict") {
  const std::string good = R"({
    "version": 1, "seed": 5, "ell": 1, "epsilon": 0.05, "samples": 1000,
    "network": {"generator": {"d": 3, "m": 2}}
  })";
  const auto cfg = parse_config_text(good);
  CHECK(cfg.seed == 5);
  CHECK(cfg.generator->d == 3);

  CHECK_THROWS_AS(parse_config_text("{"), config_error);
  CHECK_THROWS_AS(parse_config_text(R"({"version": 2, "network": {}})"), config_error);
  // unknown keys anywhere are rejected
  CHECK_THROWS_AS(parse_config_text(R"({
    "version": 1, "samples": 10, "network": {"generator": {"d": 3, "m": 2}},
    "thresholds": {"eta_two": 0.1}
  })"),
                  config_error);
  CHECK_THROWS_AS(parse_config_text(R"({
    "version": 1, "samples": 10, "network": {"generator": {"d": 3, "m": 2}}, "typo": 1
  })"),
                  config_error);
  // network needs exactly one source
  CHECK_THROWS_AS(parse_config_text(R"({"version": 1, "network": {}})"), config_error);
}

TEST_CASE("pipeline end to end at desk scale") {
  const fs::path dir = fs::temp_directory_path() / "relurec_pipeline_test";
  fs::remove_all(dir);

  ExperimentConfig cfg;
  cfg.seed = 12345;
  cfg.ell = 1;
  cfg.epsilon = 0.1;
  cfg.samples = 200'000;
  cfg.generator = GeneratorOptions{.d = 3, .m = 2, .B = 2.0, .bias_bound = 0.8,
                                   .smin_floor = 0.3};
  cfg.regression.eval_samples = 50'000;

  const auto res = run_pipeline(cfg, dir);
  REQUIRE(res.success);
  CHECK(res.recovered_units == 2);
  CHECK(res.final_units <= 4);
  CHECK(res.mse_estimate >= 0.0);
  CHECK(res.mse_estimate <= 0.05);
  CHECK(res.total_match_cost <= 0.5);

  for (const char* name :
       {artifact::kNetwork, artifact::kDataset, artifact::kEstimateReport, artifact::kUnits,
        artifact::kFinalNetwork, artifact::kMetrics, artifact::kMatchReport,
        artifact::kRunReport}) {
    CHECK(fs::exists(dir / name));
  }
  for (int k = 0; k <= 4; ++k) CHECK(fs::exists(dir / artifact::tensor_name(k)));

  // report completeness: every threshold and per-stage seed shows up
  for (const char* key : {"eta0", "eta1_rel", "eta2", "eta3", "m_max", "good_set_c",
                          "eta0_effective", "\"seeds\"", "\"generate\"", "\"sample\"",
                          "\"recover\"", "\"regress\"", "tau", "pgd_gap"}) {
    CHECK(res.report_json.find(key) != std::string::npos);
  }

  SUBCASE("reruns are byte identical") {
    const std::string first_report = slurp(dir / artifact::kRunReport);
    const std::string first_units = slurp(dir / artifact::kUnits);
    const fs::path dir2 = fs::temp_directory_path() / "relurec_pipeline_test2";
    fs::remove_all(dir2);
    const auto res2 = run_pipeline(cfg, dir2);
    REQUIRE(res2.success);
    CHECK(slurp(dir2 / artifact::kRunReport) == first_report);
    CHECK(slurp(dir2 / artifact::kUnits) == first_units);
    CHECK(slurp(dir2 / artifact::kDataset) == slurp(dir / artifact::kDataset));
    fs::remove_all(dir2);
  }

  SUBCASE("recovered units survive a JSON round trip") {
    const auto units = load_units(dir / artifact::kUnits);
    REQUIRE(units.size() == 2);
    const fs::path copy = dir / "units_copy.json";
    save_units(copy, units);
    CHECK(slurp(copy) == slurp(dir / artifact::kUnits));
  }

  fs::remove_all(dir);
}

TEST_CASE("pipeline at ell = 2 completes and reports direction errors") {
  const fs::path dir = fs::temp_directory_path() / "relurec_pipeline_ell2";
  fs::remove_all(dir);

  ExperimentConfig cfg;
  cfg.seed = 777;
  cfg.ell = 2;
  cfg.epsilon = 0.1;
  cfg.samples = 1'000'000;
  cfg.generator =
      GeneratorOptions{.d = 3, .m = 4, .B = 2.0, .bias_bound = 0.8, .smin_floor = 0.1,
                       .ell = 2};
  cfg.regression.eval_samples = 20'000;

  const auto res = run_pipeline(cfg, dir);
  REQUIRE(res.success);
  CHECK(res.recovered_units >= 1);
  CHECK(fs::exists(dir / artifact::tensor_name(6)));
  CHECK(res.report_json.find("w_error") != std::string::npos);
  fs::remove_all(dir);
}

TEST_CASE("failed stages are recorded with the stage name") {
  ExperimentConfig cfg;
  cfg.seed = 1;
  cfg.samples = 0;  // sampling must fail
  cfg.generator = GeneratorOptions{.d = 2, .m = 1};
  const fs::path dir = fs::temp_directory_path() / "relurec_pipeline_fail";
  fs::remove_all(dir);
  const auto res = run_pipeline(cfg, dir);
  CHECK_FALSE(res.success);
  CHECK(res.failed_stage == "sample");
  CHECK(fs::exists(dir / artifact::kRunReport));
  CHECK(fs::exists(dir / artifact::kNetwork));  // partial artifacts preserved
  CHECK(res.report_json.find("\"stage\": \"sample\"") != std::string::npos);
  fs::remove_all(dir);
}

TEST_SUITE_END();
