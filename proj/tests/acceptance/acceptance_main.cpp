// Acceptance suite: one line per criterion, nonzero exit if any fails.
// Every tolerance is pinned here; the checks exercise the library end to end
// at desk scale.

#include "relurec/estimate.hpp"
#include "relurec/hermite.hpp"
#include "relurec/jennrich.hpp"
#include "relurec/match.hpp"
#include "relurec/network.hpp"
#include "relurec/recover.hpp"
#include "relurec/regress.hpp"
#include "relurec/rng.hpp"
#include "relurec/tensor.hpp"
#include "relurec/verify.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

using namespace relurec;

namespace {

int g_failures = 0;

void report(const std::string& id, bool passed, const std::string& detail) {
  std::printf("[%s] %s: %s\n", passed ? "PASS" : "FAIL", id.c_str(), detail.c_str());
  std::fflush(stdout);
  if (!passed) ++g_failures;
}

double seconds_since(const std::chrono::steady_clock::time_point& t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

Eigen::VectorXd random_unit(int d, Rng& rng) {
  Eigen::VectorXd v(d);
  for (int i = 0; i < d; ++i) v[i] = rng.gaussian();
  return v / v.norm();
}

// ---------------------------------------------------------------------------
// A1: exact full-rank recovery, d=8 m=5 ell=1, 20/20 seeds at 1e-6.
void criterion_a1() {
  int good_seeds = 0;
  double worst = 0.0, worst_time = 0.0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto t0 = std::chrono::steady_clock::now();
    const ReluNetwork net = random_network(
        {.d = 8, .m = 5, .B = 2.0, .bias_bound = 1.5, .smin_floor = 0.2}, 1000 + seed);
    const auto coeffs = exact_coefficients(net, 4);
    RecoveryConfig cfg;
    cfg.ell = 1;
    cfg.m_max = 5;
    const auto units = recover_parameters(coeffs, cfg, seed);
    const auto match = match_units(net, units);
    double unit_worst = 1e300;
    if (match.matches.size() == 5 && units.size() == 5) {
      unit_worst = 0.0;
      for (const auto& m : match.matches) {
        unit_worst = std::max({unit_worst, m.w_error, m.b_error, m.a_error});
      }
    }
    const double elapsed = seconds_since(t0);
    worst_time = std::max(worst_time, elapsed);
    if (unit_worst <= 1e-6 && elapsed <= 10.0) ++good_seeds;
    worst = std::max(worst, unit_worst);
  }
  std::ostringstream os;
  os << good_seeds << "/20 seeds, worst per-parameter error " << worst << ", slowest seed "
     << worst_time << " s (limits 1e-6, 10 s)";
  report("A1 exact full-rank recovery", good_seeds == 20, os.str());
}

// ---------------------------------------------------------------------------
// A2: exact overcomplete recovery, ell=2 d=5 m=8, 20/20 seeds at 1e-5.
void criterion_a2() {
  int good_seeds = 0;
  double worst = 0.0, worst_time = 0.0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto t0 = std::chrono::steady_clock::now();
    const ReluNetwork net = random_network(
        {.d = 5, .m = 8, .B = 2.0, .bias_bound = 1.5, .smin_floor = 0.05, .ell = 2},
        2000 + seed);
    const auto coeffs = exact_coefficients(net, 6);
    RecoveryConfig cfg;
    cfg.ell = 2;
    cfg.m_max = 8;
    const auto units = recover_parameters(coeffs, cfg, seed);
    const auto match = match_units(net, units);
    double unit_worst = 1e300;
    if (match.matches.size() == 8 && units.size() == 8) {
      unit_worst = 0.0;
      for (const auto& m : match.matches) {
        unit_worst = std::max({unit_worst, m.w_error, m.b_error, m.a_error});
      }
    }
    const double elapsed = seconds_since(t0);
    worst_time = std::max(worst_time, elapsed);
    if (unit_worst <= 1e-5 && elapsed <= 60.0) ++good_seeds;
    worst = std::max(worst, unit_worst);
  }
  std::ostringstream os;
  os << good_seeds << "/20 seeds, worst error " << worst << ", slowest seed " << worst_time
     << " s (limits 1e-5, 60 s)";
  report("A2 exact overcomplete recovery", good_seeds == 20, os.str());
}

// ---------------------------------------------------------------------------
// A3: sampled recovery, d=6 m=3 B=2 N=1e6, per-unit total error <= 0.05 on
// >= 18/20 seeds.
void criterion_a3() {
  int good_seeds = 0;
  std::vector<double> worsts;
  double worst_time = 0.0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto t0 = std::chrono::steady_clock::now();
    const ReluNetwork net = random_network(
        {.d = 6, .m = 3, .B = 2.0, .bias_bound = 1.0, .smin_floor = 0.45}, 3000 + seed);
    const Dataset data = sample(net, 1'000'000, derive_seed(3, seed));
    const HermiteCoefficientSet coeffs = estimate_coefficients_cv(data, 4);
    RecoveryConfig cfg;
    cfg.ell = 1;
    cfg.m_max = 3;
    cfg.eta0 = frobenius_error_from_stderr(net.d, 4, *coeffs.stderr_for(4));
    double unit_worst = 1e300;
    try {
      const auto units = recover_parameters(coeffs, cfg, seed);
      const auto match = match_units(net, units);
      if (match.matches.size() == 3) {
        unit_worst = 0.0;
        for (const auto& m : match.matches) unit_worst = std::max(unit_worst, m.cost);
      }
    } catch (const std::exception&) {
      unit_worst = 1e300;
    }
    const double elapsed = seconds_since(t0);
    worst_time = std::max(worst_time, elapsed);
    worsts.push_back(unit_worst);
    if (unit_worst <= 0.05 && elapsed <= 300.0) ++good_seeds;
  }
  std::sort(worsts.begin(), worsts.end());
  std::ostringstream os;
  os << good_seeds << "/20 seeds with every matched unit within 0.05 (median worst-unit "
     << worsts[10] << ", slowest seed " << worst_time << " s, limit 300 s)";
  report("A3 sampled recovery", good_seeds >= 18, os.str());
}

// ---------------------------------------------------------------------------
// A4: estimator concentration: log-log slope in [-0.65, -0.35] for k = 2, 3.
void criterion_a4() {
  const ReluNetwork net = random_network(
      {.d = 5, .m = 3, .B = 2.0, .bias_bound = 1.0, .smin_floor = 0.25}, 4000);
  const std::size_t Ns[] = {10'000, 40'000, 160'000, 640'000};
  const std::uint64_t seeds[] = {11, 22, 33, 44, 55};
  bool ok = true;
  std::ostringstream os;
  for (int k : {2, 3}) {
    const auto curve = convergence_curve(net, k, Ns, seeds);
    const double slope = fitted_loglog_slope(curve);
    os << "k=" << k << " slope " << slope << "  ";
    ok = ok && slope >= -0.65 && slope <= -0.35;
  }
  os << "(target [-0.65, -0.35])";
  report("A4 estimator concentration", ok, os.str());
}

// ---------------------------------------------------------------------------
// A5: property suites (roots, Cramer, Turan, Khatri-Rao) all green.
void criterion_a5() {
  VerifyOptions opt;  // defaults: roots k<=10, Cramer k<=12, Turan k<=8, 50 KR draws
  const auto results = verify_lemmas(opt);
  double worst = 1e300;
  std::string failed;
  for (const auto& r : results) {
    worst = std::min(worst, r.worst_margin);
    if (!r.passed) failed += r.name + " ";
  }
  std::ostringstream os;
  if (failed.empty()) {
    os << "all " << results.size() << " suites passed, smallest margin " << worst;
  } else {
    os << "failed: " << failed;
  }
  report("A5 hermite and khatri-rao property suites", failed.empty(), os.str());
}

// ---------------------------------------------------------------------------
// A6: end-to-end regression with one far-out bias unit, MSE <= eps^2 at 95%
// confidence on >= 18/20 seeds, and at most m+2 hidden units.
void criterion_a6() {
  const double eps = 0.05;
  int good_seeds = 0;
  std::vector<double> mses;
  bool units_ok = true;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    ReluNetwork net = random_network(
        {.d = 6, .m = 3, .B = 2.0, .bias_bound = 1.0, .smin_floor = 0.45}, 6000 + seed);
    net.b[2] = 5.0;  // one unit far outside the good set
    const Dataset data = sample(net, 1'000'000, derive_seed(6, seed));
    const Dataset first = data.slice(0, data.size() / 2);
    const HermiteCoefficientSet coeffs = estimate_coefficients_cv(first, 4);
    RecoveryConfig cfg;
    cfg.ell = 1;
    cfg.m_max = 3;
    cfg.eta0 = frobenius_error_from_stderr(net.d, 4, *coeffs.stderr_for(4));
    double upper = 1e300;
    try {
      const auto units = recover_parameters(coeffs, cfg, seed);
      RegressionOptions opt;
      opt.m = net.m;
      opt.B = net.B;
      opt.eps = eps;
      opt.eval_samples = 400'000;
      const auto res = run_regression(data, units, opt, derive_seed(66, seed), &net);
      upper = res.mse_estimate + 1.96 * res.mse_stderr;
      mses.push_back(res.mse_estimate);
      if (res.g.hidden_units() > static_cast<std::size_t>(net.m) + 2) units_ok = false;
      if (res.truncated_fraction > 0.01) units_ok = false;
    } catch (const std::exception&) {
    }
    if (upper <= eps * eps) ++good_seeds;
  }
  std::sort(mses.begin(), mses.end());
  std::ostringstream os;
  os << good_seeds << "/20 seeds with mse + 1.96 se <= " << eps * eps;
  if (!mses.empty()) os << " (median mse " << mses[mses.size() / 2] << ")";
  os << ", unit count <= m+2 " << (units_ok ? "held" : "violated");
  report("A6 end-to-end regression", good_seeds >= 18 && units_ok, os.str());
}

// ---------------------------------------------------------------------------
// A7: the constructed sign-flip pair is pointwise identical.
void criterion_a7() {
  Rng rng(7000);
  double worst = 0.0;
  // the canonical 3-unit dependency plus a random dependent family
  {
    Eigen::MatrixXd w(2, 3);
    w.col(0) = Eigen::Vector2d(1, 0);
    w.col(1) = Eigen::Vector2d(0, 1);
    w.col(2) = -Eigen::Vector2d(1, 1).normalized();
    const auto [f, g] = nonidentifiable_pair(w);
    for (int t = 0; t < 1000; ++t) {
      Eigen::VectorXd x(2);
      x << rng.gaussian(), rng.gaussian();
      worst = std::max(worst, std::abs(evaluate(f, x) - evaluate(g, x)));
    }
  }
  {
    Eigen::MatrixXd w(3, 4);
    for (int c = 0; c < 3; ++c) w.col(c) = random_unit(3, rng);
    w.col(3) = (0.4 * w.col(0) - 1.1 * w.col(1) + 0.6 * w.col(2)).normalized();
    const auto [f, g] = nonidentifiable_pair(w);
    for (int t = 0; t < 1000; ++t) {
      Eigen::VectorXd x = Eigen::VectorXd::NullaryExpr(3, [&](Eigen::Index) {
        return rng.gaussian();
      });
      worst = std::max(worst, std::abs(evaluate(f, x) - evaluate(g, x)));
    }
  }
  std::ostringstream os;
  os << "max |f - g| over 2000 points " << worst << " (limit 1e-9)";
  report("A7 non-identifiability construction", worst <= 1e-9, os.str());
}

// ---------------------------------------------------------------------------
// A8: the K=14 Hermite risk matches the Monte-Carlo risk on 10 small pairs.
void criterion_a8() {
  int good = 0;
  double worst_rel = 0.0;
  for (int trial = 0; trial < 10; ++trial) {
    const int d = 2 + trial % 2;
    const ReluNetwork f = random_network(
        {.d = d, .m = 2, .B = 1.5, .bias_bound = 1.0, .smin_floor = 0.0}, 8000 + trial);
    const ReluNetwork g = random_network(
        {.d = d, .m = 2, .B = 1.5, .bias_bound = 1.0, .smin_floor = 0.0}, 8100 + trial);
    const auto risk = truncated_hermite_risk(f, g, 14);
    const auto mc = mc_squared_distance(f, g, 10'000'000, derive_seed(8, trial));
    const double tol = std::max(0.02 * mc.mse, 5.0 * mc.stderr_);
    const double diff = std::abs(risk.risk - mc.mse);
    worst_rel = std::max(worst_rel, diff / std::max(mc.mse, 1e-12));
    if (diff <= tol) ++good;
  }
  std::ostringstream os;
  os << good << "/10 pairs within max(2%, 5 se); worst relative gap " << worst_rel;
  report("A8 hermite risk decomposition", good == 10, os.str());
}

// ---------------------------------------------------------------------------
// A9: noiseless Jennrich exactness plus polynomial degradation in noise.
void criterion_a9() {
  Rng rng(9000);
  int exact_ok = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const int k = 1 + static_cast<int>(rng.uniform_index(6));
    const int p = std::max(k + 1, 3 + static_cast<int>(rng.uniform_index(6)));
    const int r = 3 + static_cast<int>(rng.uniform_index(6));
    std::vector<WeightedRank1> terms;
    Eigen::MatrixXd U(p, k), V(p, k), Z(r, k);
    bool drawn = false;
    for (int attempt = 0; attempt < 100 && !drawn; ++attempt) {
      for (int c = 0; c < k; ++c) {
        U.col(c) = random_unit(p, rng);
        V.col(c) = random_unit(p, rng);
        Z.col(c) = random_unit(r, rng);
      }
      if (singular_values(U)[0] / singular_values(U)[k - 1] > 50.0) continue;
      if (singular_values(V)[0] / singular_values(V)[k - 1] > 50.0) continue;
      double sep = 1e300;
      for (int i = 0; i < k && k > 1; ++i) {
        for (int j = i + 1; j < k; ++j) {
          Eigen::MatrixXd pair(r, 2);
          pair.col(0) = Z.col(i);
          pair.col(1) = Z.col(j);
          sep = std::min(sep, singular_values(pair)[1]);
        }
      }
      if (k > 1 && sep < 0.1) continue;
      drawn = true;
    }
    if (!drawn) continue;
    terms.clear();
    for (int c = 0; c < k; ++c) {
      terms.push_back({(rng.uniform() < 0.5 ? -1.0 : 1.0) * rng.uniform(0.5, 2.0),
                       {U.col(c), V.col(c), Z.col(c)}});
    }
    const DenseTensor T = rank1_sum(terms);
    const auto dec = decompose(T, k, 9100 + trial);
    if (dec.diagnostics.residual <= 1e-8 * T.frobenius_norm()) ++exact_ok;
  }

  // degradation sweep on a fixed three-term instance
  Eigen::MatrixXd U(6, 3), V(6, 3), Z(6, 3);
  Rng sweep_rng(9500);
  for (int c = 0; c < 3; ++c) {
    U.col(c) = random_unit(6, sweep_rng);
    V.col(c) = random_unit(6, sweep_rng);
    Z.col(c) = random_unit(6, sweep_rng);
  }
  std::vector<WeightedRank1> terms;
  for (int c = 0; c < 3; ++c) terms.push_back({1.0 + 0.3 * c, {U.col(c), V.col(c), Z.col(c)}});
  const DenseTensor T = rank1_sum(terms);
  std::vector<double> levels = {1e-8, 1e-7, 1e-6, 1e-5, 1e-4, 1e-3};
  std::vector<double> medians;
  for (double level : levels) {
    std::vector<double> errs;
    for (int rep = 0; rep < 9; ++rep) {
      DenseTensor noisy = T;
      DenseTensor noise(T.dims());
      for (std::size_t i = 0; i < noise.size(); ++i) noise[i] = sweep_rng.gaussian();
      const double scale = level / noise.frobenius_norm();
      for (std::size_t i = 0; i < noisy.size(); ++i) noisy[i] += scale * noise[i];
      const auto dec = decompose(noisy, 3, 9200 + rep);
      double worst_term = 0.0;
      for (const auto& truth : terms) {
        double best = 1e300;
        for (const auto& found : dec.terms) {
          best = std::min(
              best, rank1_sum({truth, {-found.weight, {found.u, found.v, found.z}}})
                        .frobenius_norm());
        }
        worst_term = std::max(worst_term, best);
      }
      errs.push_back(worst_term);
    }
    std::sort(errs.begin(), errs.end());
    medians.push_back(errs[4]);
  }
  bool monotone = true;
  for (std::size_t i = 1; i < medians.size(); ++i) {
    if (medians[i] < medians[i - 1] * 0.999) monotone = false;
  }
  const double slope = (std::log(medians.back()) - std::log(medians.front())) /
                       (std::log(levels.back()) - std::log(levels.front()));
  std::ostringstream os;
  os << exact_ok << "/100 noiseless instances at 1e-8 relative residual; sweep slope "
     << slope << (monotone ? ", monotone" : ", NOT monotone");
  report("A9 decomposition robustness", exact_ok == 100 && monotone && slope >= 0.5,
         os.str());
}

// ---------------------------------------------------------------------------
// A10: consolidation is pointwise exact with the m'+2 unit bound.
void criterion_a10() {
  Rng rng(10'000);
  double worst = 0.0;
  bool count_ok = true;
  for (int rep = 0; rep < 20; ++rep) {
    const int d = 3 + static_cast<int>(rng.uniform_index(3));
    const int m = 1 + static_cast<int>(rng.uniform_index(4));
    const FeatureMode mode = rep % 2 == 0 ? FeatureMode::Coordinated2 : FeatureMode::Full8;
    FeatureMap map;
    map.d = d;
    map.mode = mode;
    for (int i = 0; i < m; ++i) {
      RecoveredUnit u;
      u.a = rng.uniform(0.5, 2.0) * (rng.uniform() < 0.5 ? -1 : 1);
      u.b = rng.uniform(-1.5, 1.5);
      u.w = random_unit(d, rng);
      map.units.push_back(std::move(u));
    }
    Eigen::VectorXd beta(map.dim());
    for (Eigen::Index i = 0; i < beta.size(); ++i) beta[i] = rng.gaussian();
    const auto g = consolidate(beta, map);
    // m' counts distinct ReLU arguments: m in coordinated mode, 2m in full-8
    const std::size_t m_prime = mode == FeatureMode::Coordinated2 ? m : 2 * m;
    if (g.hidden_units() > m_prime + 2) count_ok = false;
    for (int t = 0; t < 1000; ++t) {
      Eigen::VectorXd x(d);
      for (int i = 0; i < d; ++i) x[i] = rng.gaussian();
      const double want = beta.dot(build_features(map, x));
      worst = std::max(worst, std::abs(g.evaluate(x) - want) / std::max(1.0, std::abs(want)));
    }
  }
  std::ostringstream os;
  os << "worst pointwise discrepancy " << worst << " over 20 predictors x 1000 points, "
     << "unit bound " << (count_ok ? "held" : "violated");
  report("A10 consolidation", worst <= 1e-9 && count_ok, os.str());
}

}  // namespace

int main() {
  const auto t0 = std::chrono::steady_clock::now();
  criterion_a1();
  criterion_a2();
  criterion_a3();
  criterion_a4();
  criterion_a5();
  criterion_a6();
  criterion_a7();
  criterion_a8();
  criterion_a9();
  criterion_a10();
  std::printf("acceptance finished in %.1f s with %d failing criteria\n",
              seconds_since(t0), g_failures);
  return g_failures == 0 ? 0 : 1;
}
