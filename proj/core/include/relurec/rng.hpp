#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace relurec {

/// splitmix64 finalizer; whitens seeds before they reach an engine.
std::uint64_t mix64(std::uint64_t x) noexcept;

/// FNV-1a over a stage name, used for per-stage seed derivation.
std::uint64_t hash_name(std::string_view name) noexcept;

/// Stage seed: mix(root ^ hash(stage)). Every source of randomness in the
/// pipeline flows from one root seed through this derivation.
std::uint64_t derive_seed(std::uint64_t root, std::string_view stage) noexcept;

/// Sub-stream seed, e.g. per sample chunk or per trial.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index) noexcept;

/// Seeded generator with hand-rolled uniform/Gaussian draws. mt19937_64 has a
/// standard-specified sequence, and the transforms below avoid
/// std::*_distribution, whose output is implementation-defined; streams are
/// therefore reproducible for a given libm.
class Rng {
public:
  explicit Rng(std::uint64_t seed) : engine_(mix64(seed)) {}

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform in [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [0, n).
  std::uint64_t uniform_index(std::uint64_t n);

  /// Standard Gaussian via Box-Muller; the second value of each pair is
  /// cached, so draw order alone determines the stream.
  double gaussian();

private:
  std::mt19937_64 engine_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace relurec
