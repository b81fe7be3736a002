#include "relurec/verify.hpp"

#include "relurec/hermite.hpp"
#include "relurec/rng.hpp"
#include "relurec/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace relurec {

namespace {

struct Margin {
  double worst = std::numeric_limits<double>::infinity();
  double at_x = 0.0;
  int at_k = 0;

  void update(double margin, double x, int k) {
    if (margin < worst) {
      worst = margin;
      at_x = x;
      at_k = k;
    }
  }
};

CheckResult finish(const std::string& name, const Margin& m) {
  CheckResult r;
  r.name = name;
  r.passed = m.worst >= 0.0;
  r.worst_margin = m.worst;
  std::ostringstream os;
  os << "worst margin " << m.worst << " at k = " << m.at_k << ", x = " << m.at_x;
  r.detail = os.str();
  return r;
}

}  // namespace

bool all_passed(const std::vector<CheckResult>& results) {
  return std::all_of(results.begin(), results.end(),
                     [](const CheckResult& r) { return r.passed; });
}

std::vector<CheckResult> verify_lemmas(const VerifyOptions& opt) {
  const auto he = opt.he ? opt.he : [](int k, double x) { return he_eval(k, x); };
  std::vector<CheckResult> out;

  const int k_top = std::max({opt.roots_k_max + 1, opt.cramer_k_max, opt.turan_k_max + 2});
  std::vector<double> grid;
  for (double x = opt.grid_lo; x <= opt.grid_hi + opt.grid_step / 2; x += opt.grid_step) {
    grid.push_back(x);
  }

  {  // three-term recurrence residual, relative to 1 + |He_{k+1}|
    Margin m;
    for (int k = 1; k + 1 <= k_top; ++k) {
      for (double x : grid) {
        const double lhs = he(k + 1, x) - x * he(k, x) + k * he(k - 1, x);
        const double denom = 1.0 + std::abs(he(k + 1, x));
        m.update(1e-9 - std::abs(lhs) / denom, x, k + 1);
      }
    }
    out.push_back(finish("recurrence-identity", m));
  }

  {  // He_k' = k He_{k-1}, central differences
    Margin m;
    const double h = 1e-5;
    for (int k = 1; k <= std::min(k_top, 8); ++k) {
      for (double x : grid) {
        const double numeric = (he(k, x + h) - he(k, x - h)) / (2 * h);
        const double exact = k * he(k - 1, x);
        const double denom = 1.0 + std::abs(exact);
        m.update(1e-6 - std::abs(numeric - exact) / denom, x, k);
      }
    }
    out.push_back(finish("derivative-identity", m));
  }

  {  // parity He_k(-x) = (-1)^k He_k(x)
    Margin m;
    for (int k = 0; k <= k_top; ++k) {
      const double sign = k % 2 == 0 ? 1.0 : -1.0;
      for (double x : grid) {
        const double denom = std::max(1.0, std::abs(he(k, x)));
        m.update(1e-12 - std::abs(he(k, -x) - sign * he(k, x)) / denom, x, k);
      }
    }
    out.push_back(finish("parity", m));
  }

  {  // Consecutive root separation. The Turan argument gives
     // max(|He_{k+1}|, |He_{k+2}|) >= sqrt(k!/2) for k >= 1; the (He_1, He_2)
     // pair has the sharp elementary floor (sqrt(5)-1)/2 instead (the x > 0
     // crossing of x and 1 - x^2).
    Margin m;
    const double golden = (std::sqrt(5.0) - 1.0) / 2.0;
    for (double x : grid) {
      const double val = std::max(std::abs(he(1, x)), std::abs(he(2, x)));
      m.update(val / golden - (1.0 - 1e-9), x, 1);
    }
    for (int k = 1; k <= opt.roots_k_max; ++k) {
      const double floor = std::sqrt(factorial(k) / 2.0);
      for (double x : grid) {
        const double val = std::max(std::abs(he(k + 1, x)), std::abs(he(k + 2, x)));
        m.update(val / floor - (1.0 - 1e-9), x, k + 1);
      }
    }
    out.push_back(finish("root-separation", m));
  }

  {  // |He_k(x)| exp(-x^2/2) <= sqrt(k!)
    Margin m;
    for (int k = 0; k <= opt.cramer_k_max; ++k) {
      const double cap = std::sqrt(factorial(k));
      for (double x : grid) {
        const double val = std::abs(he(k, x)) * std::exp(-x * x / 2.0);
        m.update((cap - val) / cap + 1e-9, x, k);
      }
    }
    out.push_back(finish("cramer-bound", m));
  }

  {  // He_{k+1}^2 - He_k He_{k+2} > 0
    Margin m;
    for (int k = 0; k <= opt.turan_k_max; ++k) {
      for (double x : grid) {
        const double lhs = he(k + 1, x) * he(k + 1, x) - he(k, x) * he(k + 2, x);
        m.update(lhs / factorial(k), x, k);  // identity value is >= k!
      }
    }
    out.push_back(finish("turan-positivity", m));
  }

  {  // E[He_j He_k] = k! 1{j=k}, within 5 standard errors
    Margin m;
    Rng rng(derive_seed(opt.seed, "orthogonality"));
    const int kmax = opt.orthogonality_k_max;
    const int pairs = (kmax + 1) * (kmax + 2) / 2;
    std::vector<double> sum(pairs, 0.0), sumsq(pairs, 0.0);
    std::vector<double> vals(kmax + 1);
    const std::size_t N = opt.orthogonality_samples;
    for (std::size_t s = 0; s < N; ++s) {
      const double x = rng.gaussian();
      for (int k = 0; k <= kmax; ++k) vals[k] = he(k, x);
      int p = 0;
      for (int j = 0; j <= kmax; ++j) {
        for (int k = j; k <= kmax; ++k, ++p) {
          const double v = vals[j] * vals[k];
          sum[p] += v;
          sumsq[p] += v * v;
        }
      }
    }
    int p = 0;
    for (int j = 0; j <= kmax; ++j) {
      for (int k = j; k <= kmax; ++k, ++p) {
        const double mean = sum[p] / static_cast<double>(N);
        const double var =
            std::max(0.0, sumsq[p] / static_cast<double>(N) - mean * mean);
        const double se = std::sqrt(var / static_cast<double>(N));
        const double expect = j == k ? factorial(k) : 0.0;
        const double dev = std::abs(mean - expect);
        m.update(5.0 * std::max(se, 1e-300) - dev, static_cast<double>(j), k);
      }
    }
    out.push_back(finish("orthogonality-mc", m));
  }

  {  // s_k(U kr V) >= kappa s_k(U) / sqrt(2k) on random instances
    Margin m;
    Rng rng(derive_seed(opt.seed, "khatri-rao"));
    for (int trial = 0; trial < opt.khatri_rao_instances; ++trial) {
      const int k = 2 + static_cast<int>(rng.uniform_index(5));       // columns
      const int rows_u = k + static_cast<int>(rng.uniform_index(6));  // >= k
      const int rows_v = 2 + static_cast<int>(rng.uniform_index(6));
      Eigen::MatrixXd U(rows_u, k), V(rows_v, k);
      for (int c = 0; c < k; ++c) {
        for (int r = 0; r < rows_u; ++r) U(r, c) = rng.gaussian();
        for (int r = 0; r < rows_v; ++r) V(r, c) = rng.gaussian();
      }
      double kappa = std::numeric_limits<double>::infinity();
      for (int c = 0; c < k; ++c) kappa = std::min(kappa, V.col(c).norm());
      const Eigen::VectorXd s = singular_values(khatri_rao(U, V));
      const Eigen::VectorXd su = singular_values(U);
      const double bound = kappa * su[k - 1] / std::sqrt(2.0 * k);
      const double margin = bound > 0 ? s[k - 1] / bound - 1.0 : s[k - 1];
      m.update(margin, static_cast<double>(trial), k);
    }
    out.push_back(finish("khatri-rao-bound", m));
  }

  return out;
}

}  // namespace relurec
