#include "relurec/regress.hpp"

#include "parallel.hpp"
#include "relurec/errors.hpp"
#include "relurec/quadrature.hpp"
#include "relurec/rng.hpp"

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <sstream>

namespace relurec {

namespace {

constexpr std::size_t kBlock = 1 << 16;

double relu(double z) { return z > 0.0 ? z : 0.0; }

void fill_features(const FeatureMap& map, const double* x, double* out) {
  int p = 0;
  for (const auto& u : map.units) {
    double z = u.b;
    for (int i = 0; i < map.d; ++i) z += u.w[i] * x[i];
    if (map.mode == FeatureMode::Coordinated2) {
      out[p++] = u.a * relu(z);
      out[p++] = u.a * relu(-z);
    } else {
      // (xi1, xi2, xi3) nested over {+1, -1}; xi-dependent argument is
      // xi1 w.x + xi2 b.
      const double wx = z - u.b;
      for (int i1 = 0; i1 < 2; ++i1) {
        const double s1 = i1 == 0 ? 1.0 : -1.0;
        for (int i2 = 0; i2 < 2; ++i2) {
          const double s2 = i2 == 0 ? 1.0 : -1.0;
          const double act = relu(s1 * wx + s2 * u.b);
          out[p++] = u.a * act;
          out[p++] = -u.a * act;
        }
      }
    }
  }
  for (int i = 0; i < map.d; ++i) out[p++] = x[i];
  out[p] = 1.0;
}

struct TruncatedMoments {
  Eigen::MatrixXd gram;   // (1/N) sum phi phi^T over surviving samples
  Eigen::VectorXd cross;  // (1/N) sum y phi
  double y2 = 0.0;        // (1/N) sum y^2
  std::size_t survivors = 0;
};

TruncatedMoments truncated_moments(const Dataset& data, const FeatureMap& map,
                                   double tau) {
  const int p = map.dim();
  const std::size_t n_blocks = (data.size() + kBlock - 1) / kBlock;
  std::vector<Eigen::MatrixXd> grams(n_blocks);
  std::vector<Eigen::VectorXd> crosses(n_blocks);
  std::vector<double> y2s(n_blocks, 0.0);
  std::vector<std::size_t> counts(n_blocks, 0);
  const double tau2 = tau * tau;
  detail::parallel_blocks(n_blocks, [&](std::size_t bi) {
    Eigen::MatrixXd G = Eigen::MatrixXd::Zero(p, p);
    Eigen::VectorXd c = Eigen::VectorXd::Zero(p);
    Eigen::VectorXd phi(p);
    double y2 = 0.0;
    std::size_t survivors = 0;
    const std::size_t begin = bi * kBlock;
    const std::size_t end = std::min(data.size(), begin + kBlock);
    for (std::size_t i = begin; i < end; ++i) {
      fill_features(map, data.xs.data() + i * static_cast<std::size_t>(data.d),
                    phi.data());
      if (phi.squaredNorm() >= tau2) continue;
      const double y = data.y(i);
      G.selfadjointView<Eigen::Lower>().rankUpdate(phi);
      c.noalias() += y * phi;
      y2 += y * y;
      ++survivors;
    }
    grams[bi] = G;
    crosses[bi] = c;
    y2s[bi] = y2;
    counts[bi] = survivors;
  });
  TruncatedMoments out;
  out.gram = Eigen::MatrixXd::Zero(p, p);
  out.cross = Eigen::VectorXd::Zero(p);
  for (std::size_t bi = 0; bi < n_blocks; ++bi) {
    out.gram += grams[bi];
    out.cross += crosses[bi];
    out.y2 += y2s[bi];
    out.survivors += counts[bi];
  }
  out.gram = out.gram.selfadjointView<Eigen::Lower>();
  const double inv_n = 1.0 / static_cast<double>(data.size());
  out.gram *= inv_n;
  out.cross *= inv_n;
  out.y2 *= inv_n;
  return out;
}

/// Exact minimizer of y2 - 2 b.cross + b.G b over ||b|| <= radius, through the
/// eigendecomposition of G and a dual bisection when the unconstrained
/// solution leaves the ball.
Eigen::VectorXd ball_least_squares(const Eigen::MatrixXd& G, const Eigen::VectorXd& cross,
                                   double radius) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(G);
  const Eigen::VectorXd evals = es.eigenvalues();
  const Eigen::VectorXd proj = es.eigenvectors().transpose() * cross;
  const double lmax = std::max(evals.maxCoeff(), 0.0);
  const double cutoff = std::max(lmax, 1.0) * 1e-14;

  auto beta_for = [&](double nu) {
    Eigen::VectorXd coeff(evals.size());
    for (Eigen::Index i = 0; i < evals.size(); ++i) {
      const double denom = evals[i] + nu;
      coeff[i] = denom > cutoff ? proj[i] / denom : 0.0;
    }
    return (es.eigenvectors() * coeff).eval();
  };

  Eigen::VectorXd beta = beta_for(0.0);
  if (beta.norm() <= radius) return beta;
  double lo = 0.0, hi = 1.0;
  while (beta_for(hi).norm() > radius) hi *= 2.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (beta_for(mid).norm() > radius) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return beta_for(hi);
}

double quadratic_loss(const TruncatedMoments& m, const Eigen::VectorXd& beta) {
  return m.y2 - 2.0 * beta.dot(m.cross) + beta.dot(m.gram * beta);
}

}  // namespace

Eigen::VectorXd build_features(const FeatureMap& map, const Eigen::VectorXd& x) {
  if (x.size() != map.d) throw std::domain_error("build_features: input dim mismatch");
  for (const auto& u : map.units) {
    if (u.w.size() != map.d) throw std::domain_error("build_features: unit dim mismatch");
  }
  Eigen::VectorXd out(map.dim());
  fill_features(map, x.data(), out.data());
  return out;
}

double default_tau(int m, int S_size, int d, double B, double eps) {
  if (eps <= 0.0 || eps >= 1.0) throw std::domain_error("default_tau: eps must be in (0,1)");
  if (m < 1 || d < 1 || S_size < 0) throw std::domain_error("default_tau: bad sizes");
  const double s = std::max(S_size, 1);  // |S| = 0 falls back to the linear-only radius
  return 20.0 * m * (8.0 * S_size + d) * B * std::sqrt(std::log(m * d * B * s / eps));
}

double default_radius(int m, int S_size, double B, FeatureMode mode) {
  const double per_unit = mode == FeatureMode::Full8 ? 8.0 : 2.0;
  return std::sqrt(per_unit * S_size) + m * (1.0 + B);
}

PgdResult truncated_pgd(const Dataset& data, const FeatureMap& map,
                        const TruncatedLossSpec& spec) {
  if (data.d != map.d) throw std::domain_error("truncated_pgd: dataset dim mismatch");
  if (spec.tau <= 0.0 || spec.radius <= 0.0) {
    throw std::domain_error("truncated_pgd: tau and radius must be positive");
  }
  const auto moments = truncated_moments(data, map, spec.tau);
  if (moments.survivors == 0) {
    std::ostringstream os;
    os << "feature-norm truncation at tau = " << spec.tau << " removed all "
       << data.size() << " samples";
    throw truncation_error(os.str());
  }

  PgdResult result;
  result.truncated_fraction =
      1.0 - static_cast<double>(moments.survivors) / static_cast<double>(data.size());

  const int p = map.dim();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(moments.gram);
  const double lmax = std::max(es.eigenvalues().maxCoeff(), 0.0);
  if (lmax <= 0.0) {
    result.beta = Eigen::VectorXd::Zero(p);
    result.loss = moments.y2;
    return result;
  }
  const double step = spec.step_size > 0.0 ? spec.step_size : 1.0 / (2.0 * lmax);

  double loss_opt = 0.0;
  if (spec.certify) {
    loss_opt = quadratic_loss(moments, ball_least_squares(moments.gram, moments.cross,
                                                          spec.radius));
  }
  // Iterate to the floating-point floor of the quadratic, not merely to the
  // certified target; the per-step cost is p^2.
  const double stop_gap = 1e-12 * std::max(1.0, moments.y2);

  Eigen::VectorXd beta = Eigen::VectorXd::Zero(p);
  int it = 0;
  for (; it < spec.steps; ++it) {
    Eigen::VectorXd grad = 2.0 * (moments.gram * beta - moments.cross);
    beta -= step * grad;
    const double norm = beta.norm();
    if (norm > spec.radius) beta *= spec.radius / norm;
    if (spec.certify && it % 64 == 0 &&
        quadratic_loss(moments, beta) - loss_opt <= stop_gap) {
      break;
    }
  }
  result.beta = beta;
  result.loss = quadratic_loss(moments, beta);
  result.iterations = it;
  if (spec.certify) {
    result.gap = std::max(0.0, result.loss - loss_opt);
    if (spec.gap_target > 0.0 && result.gap > spec.gap_target) {
      std::ostringstream os;
      os << "projected gradient descent gap " << result.gap
         << " misses the certified target " << spec.gap_target;
      throw std::runtime_error(os.str());
    }
  }
  return result;
}

LinearSurrogate absorb_large_bias(const ReluNetwork& fragment, double bias_threshold) {
  if (bias_threshold <= 0.0) throw std::domain_error("bias threshold must be positive");
  LinearSurrogate out;
  out.beta = Eigen::VectorXd::Zero(fragment.d);
  for (int i = 0; i < fragment.m; ++i) {
    const double b = fragment.b[i];
    if (std::abs(b) < bias_threshold) {
      throw std::domain_error("unit " + std::to_string(i) +
                              " has small bias; it belongs in the good set");
    }
    double unit_mse = 0.0;
    if (b > 0.0) {
      out.beta += fragment.a[i] * fragment.W.col(i);
      out.c += fragment.a[i] * b;
      // E[(relu(z) - z)^2], z ~ N(b, 1): mass of z^2 below zero.
      unit_mse = gaussian_expectation([](double z) { return z < 0.0 ? z * z : 0.0; }, b,
                                      {0.0});
    } else {
      // surrogate is identically zero; error is E[relu(z)^2]
      unit_mse = gaussian_expectation([](double z) { return z > 0.0 ? z * z : 0.0; }, b,
                                      {0.0});
    }
    // cross-unit tail correlations are products of O(b) e^{-b^2/2} means,
    // second order next to the kept terms
    out.predicted_mse += fragment.a[i] * fragment.a[i] * std::max(unit_mse, 0.0);
  }
  const double mB = fragment.m * fragment.B;
  if (out.beta.norm() > mB * (1.0 + 1e-9) || std::abs(out.c) > mB * fragment.B * (1.0 + 1e-9)) {
    throw std::runtime_error("linear surrogate norms exceed the m B / m B^2 bounds");
  }
  return out;
}

double ConsolidatedPredictor::evaluate(const Eigen::VectorXd& x) const {
  double out = 0.0;
  for (const auto& u : units) {
    const double z = u.w.dot(x) + u.b;
    if (z > 0.0) out += u.beta * z;
  }
  return out;
}

double evaluate_predictor(const ConsolidatedPredictor& g, const Eigen::VectorXd& x) {
  return g.evaluate(x);
}

ConsolidatedPredictor consolidate(const Eigen::VectorXd& beta, const FeatureMap& map) {
  if (beta.size() != map.dim()) throw std::domain_error("consolidate: beta dim mismatch");
  ConsolidatedPredictor out;
  out.d = map.d;
  const auto raw_offset = static_cast<Eigen::Index>(map.features_per_unit()) *
                          static_cast<Eigen::Index>(map.units.size());
  Eigen::VectorXd v = beta.segment(raw_offset, map.d);
  double c = beta[beta.size() - 1];

  // alpha sigma(z) + alpha' sigma(-z) = (alpha + alpha') sigma(z) - alpha' z
  auto merge_pair = [&](double alpha, double alpha_neg, const Eigen::VectorXd& w,
                        double b) {
    if (alpha + alpha_neg != 0.0) {
      out.units.push_back({alpha + alpha_neg, w, b});
    }
    if (alpha_neg != 0.0) {
      v -= alpha_neg * w;
      c -= alpha_neg * b;
    }
  };

  for (std::size_t j = 0; j < map.units.size(); ++j) {
    const auto& u = map.units[j];
    if (map.mode == FeatureMode::Coordinated2) {
      const auto base = static_cast<Eigen::Index>(2 * j);
      const double alpha = u.a * beta[base];
      const double alpha_neg = u.a * beta[base + 1];
      merge_pair(alpha, alpha_neg, u.w, u.b);
    } else {
      // Feature order: (xi1, xi2, xi3) nested over {+1, -1}; collapsing xi3
      // leaves one coefficient per ReLU argument (xi1 w, xi2 b).
      auto coeff = [&](int i1, int i2) {
        const auto base = static_cast<Eigen::Index>(8 * j) + 4 * i1 + 2 * i2;
        return u.a * (beta[base] - beta[base + 1]);
      };
      merge_pair(coeff(0, 0), coeff(1, 1), u.w, u.b);    // z = w.x + b and -z
      merge_pair(coeff(0, 1), coeff(1, 0), u.w, -u.b);   // z' = w.x - b and -z'
    }
  }

  const double vnorm = v.norm();
  if (vnorm > 0.0) {
    const Eigen::VectorXd w0 = v / vnorm;
    const double b0 = c / vnorm;
    out.units.push_back({vnorm, w0, b0});
    out.units.push_back({-vnorm, -w0, -b0});
  } else if (c != 0.0) {
    // Constant remainder: one unit with a zero direction, sigma(b0) = b0.
    out.units.push_back({c > 0.0 ? 1.0 : -1.0, Eigen::VectorXd::Zero(map.d),
                         std::abs(c)});
  }
  return out;
}

RegressionResult run_regression(const Dataset& data, const std::vector<RecoveredUnit>& S,
                                const RegressionOptions& opt, std::uint64_t seed,
                                const ReluNetwork* truth) {
  if (opt.m < 1) throw std::domain_error("run_regression: target unit count m missing");
  const std::size_t half = data.size() / 2;
  const Dataset second = data.slice(half, data.size());

  FeatureMap map;
  map.d = data.d;
  map.mode = opt.mode;
  for (const auto& u : S) {
    if (u.scalars_ok) map.units.push_back(u);
  }

  TruncatedLossSpec spec;
  spec.tau = default_tau(opt.m, static_cast<int>(map.units.size()), data.d, opt.B, opt.eps);
  spec.radius = default_radius(opt.m, static_cast<int>(map.units.size()), opt.B, opt.mode);
  spec.steps = opt.steps;
  spec.certify = opt.certify;
  spec.gap_target = opt.eps * opt.eps / 100.0;

  const PgdResult pgd = truncated_pgd(second, map, spec);

  RegressionResult result;
  result.g = consolidate(pgd.beta, map);
  result.beta = pgd.beta;
  result.tau = spec.tau;
  result.truncated_fraction = pgd.truncated_fraction;
  result.pgd_gap = pgd.gap;

  if (truth != nullptr && opt.eval_samples > 1) {
    const std::uint64_t eval_seed = derive_seed(seed, "regress-eval");
    const std::size_t n = opt.eval_samples;
    const std::size_t n_blocks = (n + kBlock - 1) / kBlock;
    std::vector<double> sums(n_blocks, 0.0), sqs(n_blocks, 0.0);
    detail::parallel_blocks(n_blocks, [&](std::size_t bi) {
      Rng rng(derive_seed(eval_seed, bi));
      Eigen::VectorXd x(data.d);
      double s = 0.0, s2 = 0.0;
      const std::size_t begin = bi * kBlock;
      const std::size_t end = std::min(n, begin + kBlock);
      for (std::size_t i = begin; i < end; ++i) {
        for (int j = 0; j < data.d; ++j) x[j] = rng.gaussian();
        const double diff = evaluate(*truth, x) - result.g.evaluate(x);
        s += diff * diff;
        s2 += diff * diff * diff * diff;
      }
      sums[bi] = s;
      sqs[bi] = s2;
    });
    double total = 0.0, total_sq = 0.0;
    for (std::size_t bi = 0; bi < n_blocks; ++bi) {
      total += sums[bi];
      total_sq += sqs[bi];
    }
    result.mse_estimate = total / static_cast<double>(n);
    const double var = std::max(
        0.0, total_sq / static_cast<double>(n) - result.mse_estimate * result.mse_estimate);
    result.mse_stderr = std::sqrt(var / static_cast<double>(n));
  }
  return result;
}

}  // namespace relurec
