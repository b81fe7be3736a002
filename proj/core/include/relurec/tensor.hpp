#pragma once

#include <Eigen/Core>

#include <cstddef>
#include <span>
#include <vector>

namespace relurec {

/// Cap on the size of any single dense tensor allocation. Default 8e8 bytes.
std::size_t tensor_memory_cap() noexcept;
void set_tensor_memory_cap(std::size_t bytes) noexcept;

/// Throws resource_error (naming the required byte count) if a tensor with
/// the given element count would exceed the cap.
void check_tensor_size(std::size_t elements);

/// Dense real tensor in row-major order (last index fastest). Order 0 is a
/// scalar: empty dims, one entry. Immutable by convention once built, so
/// values are safe to share across threads.
class DenseTensor {
public:
  DenseTensor() : data_(1, 0.0) {}
  explicit DenseTensor(std::vector<std::size_t> dims);
  DenseTensor(std::vector<std::size_t> dims, std::vector<double> data);

  static DenseTensor scalar(double v);
  /// Cubical tensor: `order` modes, each of extent d.
  static DenseTensor zeros(std::size_t extent, std::size_t order);

  const std::vector<std::size_t>& dims() const noexcept { return dims_; }
  std::size_t order() const noexcept { return dims_.size(); }
  std::size_t size() const noexcept { return data_.size(); }

  double* data() noexcept { return data_.data(); }
  const double* data() const noexcept { return data_.data(); }
  std::vector<double>& values() noexcept { return data_; }
  const std::vector<double>& values() const noexcept { return data_; }

  double operator[](std::size_t flat) const { return data_[flat]; }
  double& operator[](std::size_t flat) { return data_[flat]; }

  std::size_t flat_index(std::span<const std::size_t> idx) const;
  double at(std::span<const std::size_t> idx) const { return data_[flat_index(idx)]; }
  double& at(std::span<const std::size_t> idx) { return data_[flat_index(idx)]; }
  double at(std::initializer_list<std::size_t> idx) const;
  double& at(std::initializer_list<std::size_t> idx);

  bool same_dims(const DenseTensor& other) const { return dims_ == other.dims_; }
  /// True when every mode has the same extent (vacuously true for scalars).
  bool cubical() const noexcept;
  /// Extent of the (cubical) modes; 0 for scalars.
  std::size_t extent() const noexcept { return dims_.empty() ? 0 : dims_[0]; }

  double frobenius_norm() const;
  bool all_finite() const;

private:
  std::vector<std::size_t> dims_;
  std::vector<double> data_;
};

/// Regroups the modes of a cubical order-t tensor into (t1, t2, t3) blocks,
/// t1+t2+t3 = t. Row-major layout makes this a metadata-only reshape. With
/// t3 = 0 the result is a d^t1 x d^t2 matrix; with t2 = t3 = 0 a vector.
DenseTensor flatten(const DenseTensor& T, int t1, int t2, int t3);
DenseTensor flatten(DenseTensor&& T, int t1, int t2, int t3);

/// Inverse of flatten: reinterpret with the given dims (sizes must agree).
DenseTensor unflatten(const DenseTensor& T, std::vector<std::size_t> dims);
DenseTensor unflatten(DenseTensor&& T, std::vector<std::size_t> dims);

/// Column-wise Kronecker product: column i of the result is u_i (x) v_i.
Eigen::MatrixXd khatri_rao(const Eigen::MatrixXd& U, const Eigen::MatrixXd& V);

struct WeightedRank1 {
  double weight = 0.0;
  std::vector<Eigen::VectorXd> factors;
};

/// Sum of weighted outer products. All terms must share arity and per-mode
/// lengths.
DenseTensor rank1_sum(const std::vector<WeightedRank1>& terms);

double frobenius_distance(const DenseTensor& A, const DenseTensor& B);

/// Full singular spectrum of a matrix, descending.
Eigen::VectorXd singular_values(const Eigen::MatrixXd& M);
/// Same for an order-2 (or order-1, treated as a column) tensor.
Eigen::VectorXd singular_values(const DenseTensor& M);

Eigen::MatrixXd to_matrix(const DenseTensor& T);
DenseTensor from_matrix(const Eigen::MatrixXd& M);
Eigen::VectorXd to_vector(const DenseTensor& T);

/// Sorted (non-decreasing) multi-indices of length k over {0,...,d-1}: one
/// representative per orbit of the mode-permutation action. C(d+k-1, k) of
/// them.
std::vector<std::vector<int>> canonical_multi_indices(int d, int k);

/// Occurrence counts per coordinate for a multi-index.
std::vector<int> index_counts(std::span<const int> idx, int d);

/// Orbit size k!/prod_i n_i! of a canonical multi-index.
double multi_index_multiplicity(std::span<const int> idx, int d);

/// Flat position -> canonical id, for a cubical order-k tensor over d. Used
/// to broadcast canonical symmetric entries into dense storage.
std::vector<std::size_t> canonical_index_map(int d, int k);

/// Broadcast values on canonical multi-indices to the full symmetric tensor.
DenseTensor symmetric_broadcast(int d, int k, std::span<const double> canonical_values);

}  // namespace relurec
