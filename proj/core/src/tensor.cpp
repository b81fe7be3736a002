#include "relurec/tensor.hpp"

#include "relurec/errors.hpp"

#include <Eigen/Dense>
#include <Eigen/SVD>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numeric>
#include <sstream>

namespace relurec {

namespace {

std::atomic<std::size_t> g_memory_cap{800'000'000};

std::size_t checked_element_count(const std::vector<std::size_t>& dims) {
  std::size_t n = 1;
  for (std::size_t d : dims) {
    if (d == 0) throw std::domain_error("tensor mode of extent zero");
    if (n > SIZE_MAX / d) throw resource_error("tensor size overflows size_t", SIZE_MAX);
    n *= d;
  }
  check_tensor_size(n);
  return n;
}

std::size_t ipow(std::size_t base, int e) {
  std::size_t r = 1;
  for (int i = 0; i < e; ++i) r *= base;
  return r;
}

}  // namespace

std::size_t tensor_memory_cap() noexcept { return g_memory_cap.load(); }

void set_tensor_memory_cap(std::size_t bytes) noexcept { g_memory_cap.store(bytes); }

void check_tensor_size(std::size_t elements) {
  const std::size_t required = elements * sizeof(double);
  if (elements > tensor_memory_cap() / sizeof(double)) {
    std::ostringstream os;
    os << "tensor of " << elements << " entries needs " << required
       << " bytes, above the cap of " << tensor_memory_cap();
    throw resource_error(os.str(), required);
  }
}

DenseTensor::DenseTensor(std::vector<std::size_t> dims) : dims_(std::move(dims)) {
  data_.assign(checked_element_count(dims_), 0.0);
}

DenseTensor::DenseTensor(std::vector<std::size_t> dims, std::vector<double> data)
    : dims_(std::move(dims)), data_(std::move(data)) {
  if (checked_element_count(dims_) != data_.size()) {
    throw std::domain_error("tensor data length does not match dims");
  }
}

DenseTensor DenseTensor::scalar(double v) {
  DenseTensor t;
  t.data_[0] = v;
  return t;
}

DenseTensor DenseTensor::zeros(std::size_t extent, std::size_t order) {
  return DenseTensor(std::vector<std::size_t>(order, extent));
}

std::size_t DenseTensor::flat_index(std::span<const std::size_t> idx) const {
  if (idx.size() != dims_.size()) throw std::domain_error("multi-index arity mismatch");
  std::size_t flat = 0;
  for (std::size_t m = 0; m < dims_.size(); ++m) {
    if (idx[m] >= dims_[m]) throw std::domain_error("multi-index out of range");
    flat = flat * dims_[m] + idx[m];
  }
  return flat;
}

double DenseTensor::at(std::initializer_list<std::size_t> idx) const {
  return at(std::span<const std::size_t>(idx.begin(), idx.size()));
}

double& DenseTensor::at(std::initializer_list<std::size_t> idx) {
  return at(std::span<const std::size_t>(idx.begin(), idx.size()));
}

bool DenseTensor::cubical() const noexcept {
  return std::all_of(dims_.begin(), dims_.end(),
                     [&](std::size_t d) { return d == dims_[0]; });
}

double DenseTensor::frobenius_norm() const {
  double s = 0.0;
  for (double v : data_) s += v * v;
  return std::sqrt(s);
}

bool DenseTensor::all_finite() const {
  return std::all_of(data_.begin(), data_.end(),
                     [](double v) { return std::isfinite(v); });
}

namespace {

std::vector<std::size_t> flattened_dims(const DenseTensor& T, int t1, int t2, int t3) {
  if (t1 < 0 || t2 < 0 || t3 < 0) throw std::domain_error("negative mode group");
  if (static_cast<std::size_t>(t1 + t2 + t3) != T.order()) {
    throw std::domain_error("flatten mode groups must sum to tensor order");
  }
  if (!T.cubical()) throw std::domain_error("flatten requires equal mode extents");
  const std::size_t d = T.extent();
  std::vector<std::size_t> dims;
  if (t1 > 0) dims.push_back(ipow(d, t1));
  if (t2 > 0) dims.push_back(ipow(d, t2));
  if (t3 > 0) dims.push_back(ipow(d, t3));
  if (dims.empty()) dims = {};  // order-0 stays a scalar
  return dims;
}

}  // namespace

DenseTensor flatten(const DenseTensor& T, int t1, int t2, int t3) {
  auto dims = flattened_dims(T, t1, t2, t3);
  return DenseTensor(std::move(dims), T.values());
}

DenseTensor flatten(DenseTensor&& T, int t1, int t2, int t3) {
  auto dims = flattened_dims(T, t1, t2, t3);
  return DenseTensor(std::move(dims), std::move(T.values()));
}

DenseTensor unflatten(const DenseTensor& T, std::vector<std::size_t> dims) {
  return DenseTensor(std::move(dims), T.values());
}

DenseTensor unflatten(DenseTensor&& T, std::vector<std::size_t> dims) {
  return DenseTensor(std::move(dims), std::move(T.values()));
}

Eigen::MatrixXd khatri_rao(const Eigen::MatrixXd& U, const Eigen::MatrixXd& V) {
  if (U.cols() != V.cols()) throw std::domain_error("khatri_rao: column counts differ");
  Eigen::MatrixXd out(U.rows() * V.rows(), U.cols());
  for (Eigen::Index c = 0; c < U.cols(); ++c) {
    for (Eigen::Index i = 0; i < U.rows(); ++i) {
      out.block(i * V.rows(), c, V.rows(), 1) = U(i, c) * V.col(c);
    }
  }
  return out;
}

DenseTensor rank1_sum(const std::vector<WeightedRank1>& terms) {
  if (terms.empty()) throw std::domain_error("rank1_sum: no terms");
  std::vector<std::size_t> dims;
  for (const auto& f : terms.front().factors) {
    dims.push_back(static_cast<std::size_t>(f.size()));
  }
  for (const auto& t : terms) {
    if (t.factors.size() != dims.size()) throw std::domain_error("rank1_sum: arity mismatch");
    for (std::size_t m = 0; m < dims.size(); ++m) {
      if (static_cast<std::size_t>(t.factors[m].size()) != dims[m]) {
        throw std::domain_error("rank1_sum: factor length mismatch");
      }
    }
  }
  DenseTensor out(dims);
  const std::size_t order = dims.size();
  std::vector<std::size_t> idx(order, 0);
  for (const auto& t : terms) {
    std::fill(idx.begin(), idx.end(), 0);
    for (std::size_t flat = 0; flat < out.size(); ++flat) {
      double prod = t.weight;
      for (std::size_t m = 0; m < order; ++m) prod *= t.factors[m][idx[m]];
      out[flat] += prod;
      for (std::size_t m = order; m-- > 0;) {
        if (++idx[m] < dims[m]) break;
        idx[m] = 0;
      }
    }
  }
  return out;
}

double frobenius_distance(const DenseTensor& A, const DenseTensor& B) {
  if (!A.same_dims(B)) throw std::domain_error("frobenius_distance: dims differ");
  double s = 0.0;
  for (std::size_t i = 0; i < A.size(); ++i) {
    const double diff = A[i] - B[i];
    s += diff * diff;
  }
  return std::sqrt(s);
}

Eigen::VectorXd singular_values(const Eigen::MatrixXd& M) {
  if (!M.allFinite()) throw std::domain_error("singular_values: non-finite entries");
  if (M.rows() <= 32 && M.cols() <= 32) {
    return Eigen::JacobiSVD<Eigen::MatrixXd>(M).singularValues();
  }
  return Eigen::BDCSVD<Eigen::MatrixXd>(M).singularValues();
}

Eigen::VectorXd singular_values(const DenseTensor& M) {
  return singular_values(to_matrix(M));
}

Eigen::MatrixXd to_matrix(const DenseTensor& T) {
  if (T.order() == 1) {
    return Eigen::Map<const Eigen::VectorXd>(T.data(), T.size());
  }
  if (T.order() != 2) throw std::domain_error("to_matrix: tensor order must be 1 or 2");
  using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  return Eigen::Map<const RowMajor>(T.data(), T.dims()[0], T.dims()[1]);
}

DenseTensor from_matrix(const Eigen::MatrixXd& M) {
  DenseTensor out({static_cast<std::size_t>(M.rows()), static_cast<std::size_t>(M.cols())});
  for (Eigen::Index i = 0; i < M.rows(); ++i) {
    for (Eigen::Index j = 0; j < M.cols(); ++j) {
      out[static_cast<std::size_t>(i) * M.cols() + j] = M(i, j);
    }
  }
  return out;
}

Eigen::VectorXd to_vector(const DenseTensor& T) {
  return Eigen::Map<const Eigen::VectorXd>(T.data(), T.size());
}

std::vector<std::vector<int>> canonical_multi_indices(int d, int k) {
  if (d <= 0 || k < 0) throw std::domain_error("canonical_multi_indices: bad d or k");
  std::vector<std::vector<int>> out;
  std::vector<int> cur(k, 0);
  if (k == 0) {
    out.push_back({});
    return out;
  }
  while (true) {
    out.push_back(cur);
    int pos = k - 1;
    while (pos >= 0 && cur[pos] == d - 1) --pos;
    if (pos < 0) break;
    const int v = cur[pos] + 1;
    for (int i = pos; i < k; ++i) cur[i] = v;
  }
  return out;
}

std::vector<int> index_counts(std::span<const int> idx, int d) {
  std::vector<int> counts(d, 0);
  for (int i : idx) {
    if (i < 0 || i >= d) throw std::domain_error("index out of range");
    ++counts[i];
  }
  return counts;
}

double multi_index_multiplicity(std::span<const int> idx, int d) {
  const auto counts = index_counts(idx, d);
  double mult = 1.0;
  int placed = 0;
  // Multinomial coefficient built incrementally to stay in safe double range.
  for (int c : counts) {
    for (int j = 1; j <= c; ++j) {
      ++placed;
      mult = mult * placed / j;
    }
  }
  return mult;
}

std::vector<std::size_t> canonical_index_map(int d, int k) {
  const auto canon = canonical_multi_indices(d, k);
  // id lookup keyed by the flat index of the sorted multi-index
  const std::size_t total = ipow(static_cast<std::size_t>(d), k);
  check_tensor_size(total);
  std::vector<std::size_t> canon_flat_to_id(total, SIZE_MAX);
  for (std::size_t id = 0; id < canon.size(); ++id) {
    std::size_t flat = 0;
    for (int v : canon[id]) flat = flat * d + static_cast<std::size_t>(v);
    canon_flat_to_id[flat] = id;
  }
  std::vector<std::size_t> map(total);
  std::vector<int> idx(k, 0);
  std::vector<int> sorted(k);
  for (std::size_t flat = 0; flat < total; ++flat) {
    sorted.assign(idx.begin(), idx.end());
    std::sort(sorted.begin(), sorted.end());
    std::size_t sflat = 0;
    for (int v : sorted) sflat = sflat * d + static_cast<std::size_t>(v);
    map[flat] = canon_flat_to_id[sflat];
    for (int m = k; m-- > 0;) {
      if (++idx[m] < d) break;
      idx[m] = 0;
    }
  }
  return map;
}

DenseTensor symmetric_broadcast(int d, int k, std::span<const double> canonical_values) {
  const auto map = canonical_index_map(d, k);
  if (k == 0) return DenseTensor::scalar(canonical_values[0]);
  DenseTensor out(std::vector<std::size_t>(k, static_cast<std::size_t>(d)));
  for (std::size_t flat = 0; flat < out.size(); ++flat) {
    out[flat] = canonical_values[map[flat]];
  }
  return out;
}

}  // namespace relurec
