#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace relurec {

struct CheckResult {
  std::string name;
  bool passed = false;
  /// Distance to the failure boundary; negative margins fail.
  double worst_margin = 0.0;
  std::string detail;
};

struct VerifyOptions {
  int roots_k_max = 10;
  int cramer_k_max = 12;
  int turan_k_max = 8;
  int orthogonality_k_max = 6;
  std::size_t orthogonality_samples = 1'000'000;
  int khatri_rao_instances = 50;
  double grid_lo = -10.0;
  double grid_hi = 10.0;
  double grid_step = 0.01;
  std::uint64_t seed = 2024;
  /// Overridable Hermite evaluator, so the suites can be pointed at a
  /// deliberately corrupted implementation as a negative control.
  std::function<double(int, double)> he;
};

/// Grid and random property suites: recurrence and derivative identities,
/// parity, separation of roots, the |He_k(x)| exp(-x^2/2) <= sqrt(k!)
/// envelope, Turan positivity, Monte-Carlo orthogonality, and the
/// s_k(U (.) V) >= kappa s_k(U)/sqrt(2k) Khatri-Rao bound. Failures are
/// report entries, never exceptions.
std::vector<CheckResult> verify_lemmas(const VerifyOptions& opt = {});

bool all_passed(const std::vector<CheckResult>& results);

}  // namespace relurec
