#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace relurec {

/// Allocation refused because it would exceed the configured tensor memory cap.
class resource_error : public std::runtime_error {
public:
  resource_error(const std::string& what, std::size_t required_bytes)
      : std::runtime_error(what), required_bytes_(required_bytes) {}
  std::size_t required_bytes() const noexcept { return required_bytes_; }

private:
  std::size_t required_bytes_ = 0;
};

/// A linear system or factor matrix is too ill-conditioned to solve reliably.
/// Carries the measured least singular value.
class conditioning_error : public std::runtime_error {
public:
  conditioning_error(const std::string& what, double least_singular_value)
      : std::runtime_error(what), smin_(least_singular_value) {}
  double least_singular_value() const noexcept { return smin_; }

private:
  double smin_ = 0.0;
};

/// Simultaneous diagonalization failed: unstable complex eigenvalues after all
/// retries, a degenerate eigenvalue spectrum, or a term that is not rank one.
class decomposition_error : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// The feature-norm truncation removed every sample.
class truncation_error : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Malformed or inconsistent experiment configuration.
class config_error : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace relurec
