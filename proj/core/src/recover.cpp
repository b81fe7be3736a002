#include "relurec/recover.hpp"

#include "relurec/errors.hpp"
#include "relurec/hermite.hpp"
#include "relurec/jennrich.hpp"
#include "relurec/rng.hpp"

#include <Eigen/Dense>
#include <Eigen/SVD>

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>

namespace relurec {

namespace {

constexpr double kIndependenceFloor = 1e-8;
constexpr double kGammaFloor = 1e-12;
constexpr double kSignFloor = 1e-10;

const double kSqrt2Pi = std::sqrt(2.0 * std::numbers::pi);

Eigen::VectorXd power_column(const Eigen::VectorXd& w, int j) {
  Eigen::VectorXd out = Eigen::VectorXd::Ones(1);
  for (int t = 0; t < j; ++t) {
    Eigen::VectorXd next(out.size() * w.size());
    for (Eigen::Index i = 0; i < out.size(); ++i) {
      next.segment(i * w.size(), w.size()) = out[i] * w;
    }
    out.swap(next);
  }
  return out;
}

Eigen::MatrixXd power_matrix(const std::vector<Eigen::VectorXd>& dirs, int j) {
  const auto m = static_cast<Eigen::Index>(dirs.size());
  Eigen::MatrixXd M(power_column(dirs[0], j).size(), m);
  for (Eigen::Index i = 0; i < m; ++i) M.col(i) = power_column(dirs[i], j);
  return M;
}

struct RawCandidate {
  Eigen::VectorXd w;
  double weight = 0.0;
  bool from_odd = false;
};

}  // namespace

namespace {

/// Joint least-squares coefficients of { w_i^(x)k } against a symmetric
/// order-k tensor. Returns an empty vector when the system is too
/// ill-conditioned to trust.
Eigen::VectorXd symmetric_weights(const DenseTensor& T,
                                  const std::vector<Eigen::VectorXd>& ws, int k) {
  const auto m = static_cast<int>(ws.size());
  Eigen::MatrixXd M(static_cast<Eigen::Index>(std::pow(ws[0].size(), k)), m);
  for (int i = 0; i < m; ++i) M.col(i) = power_column(ws[i], k);
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(M, Eigen::ComputeThinU | Eigen::ComputeThinV);
  if (svd.singularValues()[m - 1] <= 1e-6) return {};
  return svd.solve(to_vector(T));
}

/// Deflated rank-1 refits: holding every other candidate fixed, re-fit the
/// joint weights of both tensors and move each direction to the leading
/// left singular direction of its deflated residuals (both tensors
/// concatenated along the columns). Exact decompositions are a fixed point;
/// on sampled tensors this trades the slice-inverse noise amplification of
/// the eigenvector step for a plain rank-1 fit against the full tensors.
void refine_directions(std::vector<DirectionCandidate>& kept, const DenseTensor& T_odd,
                       const DenseTensor& T_even, int ell, int d, double floor_odd,
                       double floor_even) {
  const auto m = static_cast<int>(kept.size());
  if (m == 0) return;
  const int k_odd = 2 * ell + 1;
  const int k_even = 2 * ell + 2;
  const auto odd_cols = static_cast<Eigen::Index>(std::pow(d, k_odd - 1));
  const auto even_cols = static_cast<Eigen::Index>(std::pow(d, k_even - 1));
  using RowMajorMap = Eigen::Map<
      const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;

  std::vector<Eigen::VectorXd> ws;
  for (const auto& c : kept) ws.push_back(c.w);
  Eigen::VectorXd lam_odd, lam_even;
  for (int round = 0; round < 20; ++round) {
    lam_odd = symmetric_weights(T_odd, ws, k_odd);
    lam_even = symmetric_weights(T_even, ws, k_even);
    if (lam_odd.size() == 0 || lam_even.size() == 0) return;  // keep raw output
    double moved = 0.0;
    for (int i = 0; i < m; ++i) {
      // residuals with everything except unit i removed
      DenseTensor r_odd = T_odd;
      DenseTensor r_even = T_even;
      for (int j = 0; j < m; ++j) {
        if (j == i) continue;
        const Eigen::VectorXd pj_odd = lam_odd[j] * power_column(ws[j], k_odd);
        const Eigen::VectorXd pj_even = lam_even[j] * power_column(ws[j], k_even);
        for (std::size_t t = 0; t < r_odd.size(); ++t) r_odd[t] -= pj_odd[t];
        for (std::size_t t = 0; t < r_even.size(); ++t) r_even[t] -= pj_even[t];
      }
      RowMajorMap m_odd(r_odd.data(), d, odd_cols);
      RowMajorMap m_even(r_even.data(), d, even_cols);
      Eigen::MatrixXd gram = m_odd * m_odd.transpose() + m_even * m_even.transpose();
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(gram);
      Eigen::VectorXd dir = es.eigenvectors().col(d - 1);
      if (dir.dot(ws[i]) < 0.0) dir = -dir;
      moved = std::max(moved, (dir - ws[i]).norm());
      ws[i] = dir;
    }
    if (moved < 1e-13) break;
  }
  for (int i = 0; i < m; ++i) {
    // orientation was held fixed across rounds, so the weight signs agree
    kept[i].w = ws[i];
    if (kept[i].weight_odd || std::abs(lam_odd[i]) >= floor_odd) {
      kept[i].weight_odd = lam_odd[i];
    }
    if (kept[i].weight_even || std::abs(lam_even[i]) >= floor_even) {
      kept[i].weight_even = lam_even[i];
    }
  }
}

double candidate_strength(const DirectionCandidate& c) {
  double s = 0.0;
  if (c.weight_odd) s = std::max(s, std::abs(*c.weight_odd));
  if (c.weight_even) s = std::max(s, std::abs(*c.weight_even));
  return s;
}

/// Coefficient of w^(x)k for a unit, and its b-derivative:
/// c_k(a, b) = (-1)^k a He_{k-2}(b) exp(-b^2/2)/sqrt(2 pi),
/// dc_k/db    = -(-1)^k a He_{k-1}(b) exp(-b^2/2)/sqrt(2 pi).
double unit_coeff(int k, double a, double b) {
  const double sign = k % 2 == 0 ? 1.0 : -1.0;
  return sign * a * he_eval(k - 2, b) * std::exp(-b * b / 2.0) / kSqrt2Pi;
}

double unit_coeff_db(int k, double a, double b) {
  const double sign = k % 2 == 0 ? 1.0 : -1.0;
  return -sign * a * he_eval(k - 1, b) * std::exp(-b * b / 2.0) / kSqrt2Pi;
}

/// Levenberg-Marquardt polish of (a_i, b_i, w_i) against the estimated
/// moment tensors of orders 2..2l+2, weighted by the risk decomposition
/// (orbit multiplicity over k!). Orders 0 and 1 are left out on purpose:
/// they carry the linear mass of any unrecovered large-bias units. An exact
/// decomposition is a fixed point, so exact-input recovery is unchanged;
/// on sampled inputs this pools every estimated entry into the parameter
/// fit instead of leaning on two linear systems.
void polish_units(std::vector<RecoveredUnit>& units, const HermiteCoefficientSet& coeffs,
                  const RecoveryConfig& cfg) {
  std::vector<int> active;
  for (std::size_t i = 0; i < units.size(); ++i) {
    if (units[i].scalars_ok) active.push_back(static_cast<int>(i));
  }
  if (active.empty()) return;
  const int m = static_cast<int>(active.size());
  const int d = static_cast<int>(units[active[0]].w.size());

  std::vector<int> orders;
  for (int k = 2; k <= 2 * cfg.ell + 2; ++k) {
    if (coeffs.has(k)) orders.push_back(k);
  }
  if (orders.empty()) return;

  struct OrderData {
    int k;
    std::vector<std::vector<int>> counts;  // per canonical entry
    std::vector<double> wsqrt;             // residual weights
    std::vector<double> target;            // canonical entries of T_k
  };
  std::vector<OrderData> data;
  std::size_t n_residuals = 0;
  for (int k : orders) {
    OrderData od;
    od.k = k;
    const auto canon = canonical_multi_indices(d, k);
    const auto& T = coeffs.at(k);
    const std::vector<double>* se = coeffs.stderr_for(k);
    double se_floor = 0.0;
    if (se != nullptr) {
      for (double v : *se) se_floor = std::max(se_floor, v);
      se_floor *= 1e-3;
    }
    for (std::size_t e = 0; e < canon.size(); ++e) {
      const auto& alpha = canon[e];
      od.counts.push_back(index_counts(alpha, d));
      if (se != nullptr && se_floor > 0.0) {
        // inverse-variance weighting of the estimated entries
        od.wsqrt.push_back(1.0 / std::max((*se)[e], se_floor));
      } else {
        // exact inputs: weight by the risk decomposition instead
        od.wsqrt.push_back(std::sqrt(multi_index_multiplicity(alpha, d) / factorial(k)));
      }
      std::vector<std::size_t> idx(alpha.begin(), alpha.end());
      od.target.push_back(T.at(std::span<const std::size_t>(idx)));
    }
    n_residuals += od.counts.size();
    data.push_back(std::move(od));
  }

  const int n_params = m * (d + 2);  // (a, b, w) per unit
  Eigen::VectorXd params(n_params);
  for (int i = 0; i < m; ++i) {
    const auto& u = units[active[i]];
    params[i * (d + 2)] = u.a;
    params[i * (d + 2) + 1] = u.b;
    params.segment(i * (d + 2) + 2, d) = u.w;
  }

  auto residuals = [&](const Eigen::VectorXd& p, Eigen::VectorXd& r,
                       Eigen::MatrixXd* jac) {
    r.resize(static_cast<Eigen::Index>(n_residuals));
    if (jac) jac->setZero(static_cast<Eigen::Index>(n_residuals), n_params);
    std::vector<double> G(d);
    Eigen::Index row = 0;
    for (const auto& od : data) {
      std::vector<double> coeff(m), dcoeff(m);
      std::vector<Eigen::VectorXd> what(m);
      for (int i = 0; i < m; ++i) {
        const double a = p[i * (d + 2)];
        const double b = p[i * (d + 2) + 1];
        what[i] = p.segment(i * (d + 2) + 2, d).normalized();
        coeff[i] = unit_coeff(od.k, a, b);
        dcoeff[i] = unit_coeff_db(od.k, a, b);
      }
      for (std::size_t e = 0; e < od.counts.size(); ++e, ++row) {
        const auto& n = od.counts[e];
        double model = 0.0;
        for (int i = 0; i < m; ++i) {
          // P = prod_t what^n_t and its per-coordinate exclusion products
          double P = 1.0;
          for (int t = 0; t < d; ++t) {
            for (int rep = 0; rep < n[t]; ++rep) P *= what[i][t];
          }
          model += coeff[i] * P;
          if (jac) {
            const double a = p[i * (d + 2)];
            (*jac)(row, i * (d + 2)) +=
                od.wsqrt[e] * (std::abs(a) > 1e-12 ? coeff[i] / a : 0.0) * P;
            (*jac)(row, i * (d + 2) + 1) += od.wsqrt[e] * dcoeff[i] * P;
            double gdotw = 0.0;
            for (int t = 0; t < d; ++t) {
              if (n[t] == 0) {
                G[t] = 0.0;
                continue;
              }
              double excl = static_cast<double>(n[t]);
              for (int rep = 0; rep < n[t] - 1; ++rep) excl *= what[i][t];
              for (int t2 = 0; t2 < d; ++t2) {
                if (t2 == t) continue;
                for (int rep = 0; rep < n[t2]; ++rep) excl *= what[i][t2];
              }
              G[t] = excl;
              gdotw += excl * what[i][t];
            }
            for (int t = 0; t < d; ++t) {
              (*jac)(row, i * (d + 2) + 2 + t) +=
                  od.wsqrt[e] * coeff[i] * (G[t] - gdotw * what[i][t]);
            }
          }
        }
        r[row] = od.wsqrt[e] * (model - od.target[e]);
      }
    }
  };

  Eigen::VectorXd r;
  residuals(params, r, nullptr);
  double cost = r.squaredNorm();
  double lm = 1e-6;
  for (int it = 0; it < 24; ++it) {
    Eigen::MatrixXd J;
    residuals(params, r, &J);
    const Eigen::MatrixXd JtJ = J.transpose() * J;
    const Eigen::VectorXd g = J.transpose() * r;
    bool accepted = false;
    for (int attempt = 0; attempt < 8; ++attempt) {
      Eigen::MatrixXd damped = JtJ;
      damped.diagonal() += lm * (JtJ.diagonal().array() + 1e-12).matrix();
      const Eigen::VectorXd delta = damped.ldlt().solve(-g);
      Eigen::VectorXd trial = params + delta;
      for (int i = 0; i < m; ++i) {
        trial.segment(i * (d + 2) + 2, d).normalize();
      }
      Eigen::VectorXd rt;
      residuals(trial, rt, nullptr);
      const double trial_cost = rt.squaredNorm();
      if (trial_cost < cost) {
        params = trial;
        cost = trial_cost;
        lm = std::max(lm / 3.0, 1e-12);
        accepted = true;
        break;
      }
      lm *= 4.0;
    }
    if (!accepted) break;
  }

  for (int i = 0; i < m; ++i) {
    auto& u = units[active[i]];
    u.a = params[i * (d + 2)];
    u.b = params[i * (d + 2) + 1];
    u.w = params.segment(i * (d + 2) + 2, d);
  }
}

}  // namespace

void RecoveryConfig::validate() const {
  if (ell < 1) throw std::domain_error("recovery: ell must be >= 1");
  if (eta1_rel <= 0 || eta2 <= 0 || eta3 <= 0) {
    throw std::domain_error("recovery thresholds must be positive");
  }
  if (m_max < 1) throw std::domain_error("recovery: m_max must be >= 1");
}

double good_bias_radius(const RecoveryConfig& cfg, double eps, int m, int d, double B) {
  const double arg = 1.0 / (eps * m * d * B);
  if (arg <= 1.0) return 0.0;
  return cfg.good_set_c * std::sqrt(std::log(arg));
}

std::vector<DirectionCandidate> recover_directions(const DenseTensor& T_odd,
                                                   const DenseTensor& T_even,
                                                   const RecoveryConfig& cfg,
                                                   std::uint64_t seed) {
  cfg.validate();
  const int ell = cfg.ell;
  if (T_odd.order() != static_cast<std::size_t>(2 * ell + 1) ||
      T_even.order() != static_cast<std::size_t>(2 * ell + 2)) {
    throw std::domain_error("tensor orders do not match 2l+1 and 2l+2");
  }
  if (!T_odd.cubical() || !T_even.cubical() || T_odd.extent() != T_even.extent()) {
    throw std::domain_error("coefficient tensors must share a common extent");
  }
  const int d = static_cast<int>(T_odd.extent());

  std::vector<RawCandidate> raw;
  double floor_odd = cfg.eta2, floor_even = cfg.eta2;
  auto run_side = [&](const DenseTensor& T, bool odd) {
    const int detect_cols = odd ? ell + 1 : ell + 2;
    const Eigen::MatrixXd M = to_matrix(flatten(T, ell, detect_cols, 0));
    const Eigen::VectorXd s = singular_values(M);
    const double s1 = s.size() > 0 ? s[0] : 0.0;
    if (s1 <= 0.0) return;
    // Noise floor of the detection matricization. Singular values past the
    // rank cap are pure sampling error, so the spectrum calibrates itself;
    // the Frobenius budget eta0 (scaled to an operator norm through the
    // (sqrt(p) + sqrt(q))/sqrt(p q) shape factor) backs it up when the cap
    // leaves no spare directions. Exact inputs have both floors at zero.
    const double sigma_f = odd ? cfg.eta0 / std::sqrt(static_cast<double>(d)) : cfg.eta0;
    const double rows = static_cast<double>(M.rows());
    const double cols = static_cast<double>(M.cols());
    const double sigma_op = sigma_f * (std::sqrt(rows) + std::sqrt(cols)) /
                            std::sqrt(rows * cols);
    double noise_floor = sigma_op;
    if (s.size() > cfg.m_max) noise_floor = std::max(noise_floor, 1.5 * s[cfg.m_max]);
    const double eta1 = std::max(cfg.eta1_rel * s1, noise_floor);
    const double eta2 = std::max(cfg.eta2, noise_floor);
    (odd ? floor_odd : floor_even) = eta2;
    const int k = detect_rank(M, eta1, cfg.m_max);
    if (k == 0) return;
    const DenseTensor T3 = flatten(T, ell, ell, odd ? 1 : 2);
    const auto dec =
        decompose(T3, k, derive_seed(seed, odd ? "jennrich-odd" : "jennrich-even"));
    for (const auto& term : dec.terms) {
      if (std::abs(term.weight) < eta2) continue;  // |lambda| <= |term.weight|
      const auto dir = extract_direction(term, d, ell, ell, odd ? 1 : 2);
      if (std::abs(dir.weight) < eta2) continue;
      raw.push_back({dir.w, dir.weight, odd});
    }
  };
  run_side(T_odd, true);
  run_side(T_even, false);

  std::stable_sort(raw.begin(), raw.end(), [](const RawCandidate& a, const RawCandidate& b) {
    return std::abs(a.weight) > std::abs(b.weight);
  });

  const std::string odd_name = "T" + std::to_string(2 * ell + 1);
  const std::string even_name = "T" + std::to_string(2 * ell + 2);
  std::vector<DirectionCandidate> cands;
  for (const auto& r : raw) {
    DirectionCandidate out;
    out.w = r.w;
    if (r.from_odd) {
      out.weight_odd = r.weight;
      out.source = odd_name;
    } else {
      out.weight_even = r.weight;
      out.source = even_name;
    }
    cands.push_back(std::move(out));
  }

  // Greedy dedup in descending strength: keep a direction only if it is more
  // than eta3 away (up to sign) from everything kept so far; merged
  // duplicates donate their weight from the other tensor.
  auto dedup = [&](std::vector<DirectionCandidate> in) {
    std::stable_sort(in.begin(), in.end(),
                     [](const DirectionCandidate& a, const DirectionCandidate& b) {
                       return candidate_strength(a) > candidate_strength(b);
                     });
    std::vector<DirectionCandidate> kept;
    for (const auto& cand : in) {
      bool duplicate = false;
      for (auto& k : kept) {
        const double dist_plus = (cand.w - k.w).norm();
        const double dist_minus = (cand.w + k.w).norm();
        if (std::min(dist_plus, dist_minus) <= cfg.eta3) {
          duplicate = true;
          const bool flipped = dist_minus < dist_plus;
          if (cand.weight_odd && !k.weight_odd) {
            // odd-order coefficients flip with the orientation of w
            k.weight_odd = flipped ? -*cand.weight_odd : *cand.weight_odd;
          }
          if (cand.weight_even && !k.weight_even) k.weight_even = *cand.weight_even;
          if (k.source.find(cand.source) == std::string::npos) {
            k.source += "+" + cand.source;
          }
          break;
        }
      }
      if (!duplicate) kept.push_back(cand);
    }
    return kept;
  };

  auto kept = dedup(std::move(cands));
  refine_directions(kept, T_odd, T_even, ell, d, floor_odd, floor_even);
  // Refined duplicates converge to a common fixed point, so dedup again,
  // then drop candidates whose refitted weights sit below the noise floor on
  // both sides.
  kept = dedup(std::move(kept));
  const std::size_t before = kept.size();
  std::erase_if(kept, [&](const DirectionCandidate& c) {
    const double wo = c.weight_odd ? std::abs(*c.weight_odd) : 0.0;
    const double we = c.weight_even ? std::abs(*c.weight_even) : 0.0;
    return wo < floor_odd && we < floor_even;
  });
  // the model has at most m_max units; spare candidates are noise
  if (kept.size() > static_cast<std::size_t>(cfg.m_max)) {
    std::stable_sort(kept.begin(), kept.end(),
                     [](const DirectionCandidate& a, const DirectionCandidate& b) {
                       return candidate_strength(a) > candidate_strength(b);
                     });
    kept.resize(static_cast<std::size_t>(cfg.m_max));
  }
  if (kept.size() != before) {
    refine_directions(kept, T_odd, T_even, ell, d, floor_odd, floor_even);
  }
  return kept;
}

std::vector<RecoveredUnit> recover_scalars(const std::vector<Eigen::VectorXd>& directions,
                                           const HermiteCoefficientSet& coeffs,
                                           const RecoveryConfig& cfg) {
  cfg.validate();
  if (directions.empty()) return {};
  const int ell = cfg.ell;
  const auto m = static_cast<int>(directions.size());

  {
    const Eigen::VectorXd s = singular_values(power_matrix(directions, ell));
    if (s.size() < m || s[m - 1] <= kIndependenceFloor) {
      throw conditioning_error("direction powers are numerically dependent",
                               s.size() < m ? 0.0 : s[m - 1]);
    }
  }

  const int j_lo = ell == 1 ? 2 : ell;
  const int j_hi = ell == 1 ? 3 : ell + 3;
  // zeta[j - j_lo][i]
  std::vector<Eigen::VectorXd> zeta;
  for (int j = j_lo; j <= j_hi; ++j) {
    const Eigen::MatrixXd M = power_matrix(directions, j);
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(M, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const double smin = svd.singularValues()[m - 1];
    if (smin <= kIndependenceFloor) {
      throw conditioning_error("scalar system for order " + std::to_string(j) +
                                   " is ill-conditioned",
                               smin);
    }
    zeta.push_back(svd.solve(to_vector(coeffs.at(j))));
  }

  std::vector<RecoveredUnit> units(m);
  for (int i = 0; i < m; ++i) {
    RecoveredUnit& u = units[i];
    u.w = directions[i];
    if (ell == 1) {
      const double z2 = zeta[0][i];
      const double z3 = zeta[1][i];
      if (std::abs(z2) < kGammaFloor) {
        u.scalars_ok = false;
        continue;
      }
      u.b = -z3 / z2;
      u.a = z2 * kSqrt2Pi * std::exp(u.b * u.b / 2.0);
    } else {
      // gamma indexed by Hermite degree: gamma_{j-2} = zeta_j.
      auto gamma = [&](int deg) { return zeta[deg - (ell - 2)][i]; };
      const int q = std::abs(gamma(ell - 1)) >= std::abs(gamma(ell)) ? ell - 1 : ell;
      if (std::abs(gamma(q)) < kGammaFloor) {
        u.scalars_ok = false;
        continue;
      }
      u.b = -(gamma(q + 1) + static_cast<double>(q) * gamma(q - 1)) / gamma(q);
      const double he_q = he_eval(q, u.b);
      if (std::abs(he_q) < kGammaFloor) {
        u.scalars_ok = false;
        u.b = 0.0;
        continue;
      }
      const double sign = q % 2 == 0 ? 1.0 : -1.0;
      u.a = sign * kSqrt2Pi * gamma(q) * std::exp(u.b * u.b / 2.0) / he_q;
    }
  }
  return units;
}

std::vector<RecoveredUnit> fix_signs(std::vector<RecoveredUnit> units,
                                     const Eigen::VectorXd& T1) {
  std::vector<int> active;
  for (std::size_t i = 0; i < units.size(); ++i) {
    if (units[i].scalars_ok) active.push_back(static_cast<int>(i));
  }
  if (active.empty()) return units;
  const auto d = T1.size();
  if (static_cast<Eigen::Index>(active.size()) > d) {
    throw conditioning_error("fix_signs needs m' <= d", 0.0);
  }
  Eigen::MatrixXd M(d, active.size());
  for (std::size_t c = 0; c < active.size(); ++c) {
    const auto& u = units[active[c]];
    M.col(c) = u.a * u.w;
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(M, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const double smin = svd.singularValues()[active.size() - 1];
  if (smin <= kIndependenceFloor) {
    throw conditioning_error("sign system is ill-conditioned", smin);
  }
  const Eigen::VectorXd z = svd.solve(T1);
  for (std::size_t c = 0; c < active.size(); ++c) {
    RecoveredUnit& u = units[active[c]];
    if (std::abs(z[c]) < kSignFloor) continue;  // ambiguous; left unresolved
    const int xi = z[c] > 0.0 ? 1 : -1;
    u.sign_resolved = xi;
    u.b *= xi;
    u.w *= xi;
  }
  return units;
}

std::vector<RecoveredUnit> recover_parameters(const HermiteCoefficientSet& coeffs,
                                              const RecoveryConfig& cfg,
                                              std::uint64_t seed) {
  cfg.validate();
  const auto dirs = recover_directions(coeffs.at(2 * cfg.ell + 1),
                                       coeffs.at(2 * cfg.ell + 2), cfg, seed);
  if (dirs.empty()) return {};
  std::vector<Eigen::VectorXd> ws;
  ws.reserve(dirs.size());
  for (const auto& c : dirs) ws.push_back(c.w);
  auto units = recover_scalars(ws, coeffs, cfg);
  for (std::size_t i = 0; i < units.size(); ++i) units[i].source = dirs[i].source;
  polish_units(units, coeffs, cfg);
  if (cfg.ell == 1) {
    std::size_t ok = 0;
    for (const auto& u : units) ok += u.scalars_ok ? 1 : 0;
    const auto d = static_cast<std::size_t>(ws[0].size());
    if (ok > 0 && ok <= d) {
      units = fix_signs(std::move(units), to_vector(coeffs.at(1)));
    }
  }
  return units;
}

void save_units(const std::filesystem::path& path,
                const std::vector<RecoveredUnit>& units) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& u : units) {
    nlohmann::json j;
    j["a"] = u.a;
    j["b"] = u.b;
    nlohmann::json w = nlohmann::json::array();
    for (Eigen::Index i = 0; i < u.w.size(); ++i) w.push_back(u.w[i]);
    j["w"] = w;
    j["sign_resolved"] =
        u.sign_resolved ? nlohmann::json(*u.sign_resolved) : nlohmann::json(nullptr);
    j["source"] = u.source;
    arr.push_back(std::move(j));
  }
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open " + path.string() + " for writing");
  os << arr.dump(2) << '\n';
}

std::vector<RecoveredUnit> load_units(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open " + path.string());
  const auto arr = nlohmann::json::parse(is);
  std::vector<RecoveredUnit> units;
  for (const auto& j : arr) {
    RecoveredUnit u;
    u.a = j.at("a").get<double>();
    u.b = j.at("b").get<double>();
    const auto w = j.at("w").get<std::vector<double>>();
    u.w = Eigen::Map<const Eigen::VectorXd>(w.data(), static_cast<Eigen::Index>(w.size()));
    if (j.contains("sign_resolved") && !j.at("sign_resolved").is_null()) {
      u.sign_resolved = j.at("sign_resolved").get<int>();
    }
    if (j.contains("source")) u.source = j.at("source").get<std::string>();
    units.push_back(std::move(u));
  }
  return units;
}

}  // namespace relurec
