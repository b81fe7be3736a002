#include "relurec/network.hpp"

#include "parallel.hpp"
#include "relurec/errors.hpp"
#include "relurec/hermite.hpp"
#include "relurec/rng.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <numbers>
#include <sstream>

namespace relurec {

namespace {

constexpr std::size_t kSampleChunk = 1 << 16;

const double kInvSqrt2Pi = 1.0 / std::sqrt(2.0 * std::numbers::pi);

Eigen::MatrixXd khatri_rao_power(const Eigen::MatrixXd& W, int ell) {
  Eigen::MatrixXd M = W;
  for (int t = 1; t < ell; ++t) M = khatri_rao(M, W);
  return M;
}

}  // namespace

double gaussian_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

void ReluNetwork::validate() const {
  if (d <= 0 || m < 0) throw std::domain_error("network dims must be positive");
  if (a.size() != m || b.size() != m) throw std::domain_error("a/b length != m");
  if (W.rows() != d || W.cols() != m) throw std::domain_error("W shape != d x m");
  if (!a.allFinite() || !b.allFinite() || !W.allFinite()) {
    throw std::domain_error("network parameters must be finite");
  }
  for (int i = 0; i < m; ++i) {
    if (std::abs(W.col(i).norm() - 1.0) > 1e-10) {
      throw std::domain_error("W column " + std::to_string(i) + " is not unit norm");
    }
  }
  if (B < 1.0) throw std::domain_error("bound B must be >= 1");
}

std::vector<std::string> check_bounds(const ReluNetwork& net) {
  std::vector<std::string> out;
  auto flag = [&](const std::string& msg) { out.push_back(msg); };
  for (int i = 0; i < net.m; ++i) {
    if (std::abs(net.a[i]) > net.B) flag("|a[" + std::to_string(i) + "]| above B");
    if (std::abs(net.a[i]) < 1.0 / net.B) flag("|a[" + std::to_string(i) + "]| below 1/B");
    if (std::abs(net.b[i]) > net.B) flag("|b[" + std::to_string(i) + "]| above B");
  }
  if (net.W.size() > 0 && net.W.cwiseAbs().maxCoeff() > net.B) flag("|W| above B");
  return out;
}

double evaluate(const ReluNetwork& net, const Eigen::VectorXd& x) {
  if (x.size() != net.d) throw std::domain_error("evaluate: input dim mismatch");
  double out = 0.0;
  for (int i = 0; i < net.m; ++i) {
    const double z = net.W.col(i).dot(x) + net.b[i];
    if (z > 0.0) out += net.a[i] * z;
  }
  return out;
}

Dataset Dataset::slice(std::size_t begin, std::size_t end) const {
  if (begin > end || end > size()) throw std::domain_error("bad dataset slice");
  Dataset out;
  out.d = d;
  out.xs.assign(xs.begin() + begin * d, xs.begin() + end * d);
  out.ys.assign(ys.begin() + begin, ys.begin() + end);
  return out;
}

Dataset sample(const ReluNetwork& net, std::size_t N, std::uint64_t seed) {
  if (N < 1) throw std::domain_error("sample: N must be at least 1");
  net.validate();
  Dataset data;
  data.d = net.d;
  data.xs.resize(N * static_cast<std::size_t>(net.d));
  data.ys.resize(N);
  const std::size_t n_chunks = (N + kSampleChunk - 1) / kSampleChunk;
  detail::parallel_blocks(n_chunks, [&](std::size_t c) {
    Rng rng(derive_seed(seed, c));
    const std::size_t begin = c * kSampleChunk;
    const std::size_t end = std::min(N, begin + kSampleChunk);
    Eigen::VectorXd x(net.d);
    for (std::size_t i = begin; i < end; ++i) {
      for (int j = 0; j < net.d; ++j) x[j] = rng.gaussian();
      Eigen::Map<Eigen::VectorXd>(data.xs.data() + i * net.d, net.d) = x;
      data.ys[i] = evaluate(net, x);
    }
  });
  return data;
}

double hermite_coeff_scalar(const ReluNetwork& net, int k, int unit) {
  const double bi = net.b[unit];
  const double ai = net.a[unit];
  if (k == 0) {
    return ai * (bi * gaussian_cdf(bi) + std::exp(-bi * bi / 2.0) * kInvSqrt2Pi);
  }
  if (k == 1) return ai * gaussian_cdf(bi);
  const double sign = k % 2 == 0 ? 1.0 : -1.0;
  return sign * ai * he_eval(k - 2, bi) * std::exp(-bi * bi / 2.0) * kInvSqrt2Pi;
}

DenseTensor exact_hermite_coeff(const ReluNetwork& net, int k) {
  if (k < 0) throw std::domain_error("negative coefficient order");
  if (k == 0) {
    double v = 0.0;
    for (int i = 0; i < net.m; ++i) v += hermite_coeff_scalar(net, 0, i);
    return DenseTensor::scalar(v);
  }
  // Canonical entries in a fixed evaluation order, then broadcast: permuted
  // entries are bit-identical, keeping the tensor exactly symmetric.
  std::vector<double> weights(net.m);
  for (int i = 0; i < net.m; ++i) weights[i] = hermite_coeff_scalar(net, k, i);
  const auto canon = canonical_multi_indices(net.d, k);
  std::vector<double> values(canon.size(), 0.0);
  for (std::size_t c = 0; c < canon.size(); ++c) {
    const auto counts = index_counts(canon[c], net.d);
    double entry = 0.0;
    for (int i = 0; i < net.m; ++i) {
      double prod = weights[i];
      for (int t = 0; t < net.d; ++t) {
        for (int rep = 0; rep < counts[t]; ++rep) prod *= net.W(t, i);
      }
      entry += prod;
    }
    values[c] = entry;
  }
  return symmetric_broadcast(net.d, k, values);
}

const DenseTensor& HermiteCoefficientSet::at(int k) const {
  auto it = tensors.find(k);
  if (it == tensors.end()) {
    throw std::domain_error("coefficient set is missing order " + std::to_string(k));
  }
  return it->second;
}

HermiteCoefficientSet exact_coefficients(const ReluNetwork& net, int k_max) {
  HermiteCoefficientSet out;
  for (int k = 0; k <= k_max; ++k) out.set(k, exact_hermite_coeff(net, k));
  return out;
}

SmoothedInstance smoothed_instance(const SmoothedSpec& spec) {
  if (spec.tau <= 0.0) throw std::domain_error("smoothing magnitude must be positive");
  spec.base.validate();
  Rng rng(derive_seed(spec.seed, "smoothed"));
  SmoothedInstance out;
  out.net = spec.base;
  const double sd = spec.tau / std::sqrt(static_cast<double>(spec.base.d));
  for (int j = 0; j < out.net.m; ++j) {
    for (int i = 0; i < out.net.d; ++i) {
      out.net.W(i, j) += sd * rng.gaussian();
    }
    const double norm = out.net.W.col(j).norm();
    out.net.W.col(j) /= norm;
    out.net.a[j] *= norm;
    out.net.b[j] /= norm;
  }
  out.smin_khatri_rao =
      singular_values(khatri_rao_power(out.net.W, spec.ell)).minCoeff();
  out.bound_violations = check_bounds(out.net);
  return out;
}

std::pair<ReluNetwork, ReluNetwork> nonidentifiable_pair(const Eigen::MatrixXd& w_columns) {
  const int d = static_cast<int>(w_columns.rows());
  const int m = static_cast<int>(w_columns.cols());
  if (m < 2) throw std::domain_error("need at least two directions");
  for (int i = 0; i < m; ++i) {
    if (std::abs(w_columns.col(i).norm() - 1.0) > 1e-10) {
      throw std::domain_error("directions must be unit vectors");
    }
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(w_columns, Eigen::ComputeFullV);
  const double smin = m <= d ? svd.singularValues().minCoeff() : 0.0;
  if (m <= d && smin > 1e-8) {
    throw std::domain_error("directions are numerically independent (s_min = " +
                            std::to_string(smin) + ")");
  }
  Eigen::VectorXd beta = svd.matrixV().col(m - 1);
  if (beta.norm() < 1e-12) throw std::domain_error("null combination is zero");

  ReluNetwork f;
  f.d = d;
  f.m = m;
  f.a = beta;
  f.b = Eigen::VectorXd::Zero(m);
  f.W = w_columns;
  double bound = 1.0;
  for (int i = 0; i < m; ++i) {
    const double mag = std::abs(beta[i]);
    bound = std::max(bound, mag);
    if (mag > 1e-12) bound = std::max(bound, 1.0 / mag);
  }
  f.B = bound;

  ReluNetwork g = f;
  for (int i = 0; i < m; ++i) {
    if (std::abs(beta[i]) > 1e-12) g.W.col(i) *= -1.0;
  }
  return {f, g};
}

ReluNetwork random_network(const GeneratorOptions& opt, std::uint64_t seed) {
  if (opt.d <= 0 || opt.m < 0) throw std::domain_error("generator dims must be positive");
  if (opt.B < 1.0) throw std::domain_error("generator bound B must be >= 1");
  Rng rng(derive_seed(seed, "generate"));
  ReluNetwork net;
  net.d = opt.d;
  net.m = opt.m;
  net.B = opt.B;
  net.a.resize(opt.m);
  net.b.resize(opt.m);
  net.W.resize(opt.d, opt.m);
  for (int attempt = 0;; ++attempt) {
    if (attempt >= opt.max_attempts) {
      throw std::domain_error("could not draw W with s_m(W^{kr ell}) above floor");
    }
    for (int j = 0; j < opt.m; ++j) {
      Eigen::VectorXd w(opt.d);
      do {
        for (int i = 0; i < opt.d; ++i) w[i] = rng.gaussian();
      } while (w.norm() < 1e-12);
      net.W.col(j) = w / w.norm();
    }
    if (opt.m == 0) break;
    const double smin = singular_values(khatri_rao_power(net.W, opt.ell)).minCoeff();
    if (smin >= opt.smin_floor) break;
  }
  for (int i = 0; i < opt.m; ++i) {
    const double mag = rng.uniform(1.0 / opt.B, opt.B);
    net.a[i] = rng.uniform() < 0.5 ? -mag : mag;
    net.b[i] = rng.uniform(-opt.bias_bound, opt.bias_bound);
  }
  return net;
}

RiskDecomposition truncated_hermite_risk(const ReluNetwork& f, const ReluNetwork& g,
                                         int K) {
  if (f.d != g.d) throw std::domain_error("networks live in different dimensions");
  RiskDecomposition out;
  out.K = K;
  const int d = f.d;
  for (int k = 0; k <= K; ++k) {
    double term = 0.0;
    if (k == 0) {
      double vf = 0.0, vg = 0.0;
      for (int i = 0; i < f.m; ++i) vf += hermite_coeff_scalar(f, 0, i);
      for (int i = 0; i < g.m; ++i) vg += hermite_coeff_scalar(g, 0, i);
      term = (vf - vg) * (vf - vg);
    } else {
      std::vector<double> cf(f.m), cg(g.m);
      for (int i = 0; i < f.m; ++i) cf[i] = hermite_coeff_scalar(f, k, i);
      for (int i = 0; i < g.m; ++i) cg[i] = hermite_coeff_scalar(g, k, i);
      for (const auto& alpha : canonical_multi_indices(d, k)) {
        const auto counts = index_counts(alpha, d);
        double entry = 0.0;
        for (int i = 0; i < f.m; ++i) {
          double prod = cf[i];
          for (int t = 0; t < d; ++t) {
            for (int r = 0; r < counts[t]; ++r) prod *= f.W(t, i);
          }
          entry += prod;
        }
        for (int i = 0; i < g.m; ++i) {
          double prod = cg[i];
          for (int t = 0; t < d; ++t) {
            for (int r = 0; r < counts[t]; ++r) prod *= g.W(t, i);
          }
          entry -= prod;
        }
        term += multi_index_multiplicity(alpha, d) * entry * entry;
      }
    }
    term /= factorial(k);
    out.risk += term;
    if (k == K) out.last_term = term;
  }
  return out;
}

MseEstimate mc_squared_distance(const ReluNetwork& f, const ReluNetwork& g,
                                std::size_t N, std::uint64_t seed) {
  if (f.d != g.d) throw std::domain_error("networks live in different dimensions");
  if (N < 2) throw std::domain_error("need at least two samples");
  const std::size_t n_chunks = (N + kSampleChunk - 1) / kSampleChunk;
  std::vector<double> sums(n_chunks, 0.0), sq_sums(n_chunks, 0.0);
  detail::parallel_blocks(n_chunks, [&](std::size_t c) {
    Rng rng(derive_seed(seed, c));
    const std::size_t begin = c * kSampleChunk;
    const std::size_t end = std::min(N, begin + kSampleChunk);
    Eigen::VectorXd x(f.d);
    double s = 0.0, s2 = 0.0;
    for (std::size_t i = begin; i < end; ++i) {
      for (int j = 0; j < f.d; ++j) x[j] = rng.gaussian();
      const double diff = evaluate(f, x) - evaluate(g, x);
      const double v = diff * diff;
      s += v;
      s2 += v * v;
    }
    sums[c] = s;
    sq_sums[c] = s2;
  });
  double total = 0.0, total_sq = 0.0;
  for (std::size_t c = 0; c < n_chunks; ++c) {
    total += sums[c];
    total_sq += sq_sums[c];
  }
  MseEstimate est;
  est.N = N;
  est.mse = total / static_cast<double>(N);
  const double var =
      std::max(0.0, total_sq / static_cast<double>(N) - est.mse * est.mse);
  est.stderr_ = std::sqrt(var / static_cast<double>(N));
  return est;
}

}  // namespace relurec
