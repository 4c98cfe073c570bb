#pragma once

#include <cstdint>

namespace fracwave {

/// Counter-based generator: draw k is splitmix64(seed + k * golden_gamma).
/// Outputs depend only on (seed, k), so every platform reproduces the
/// same stream bit for bit (normal draws also go through libm log/cos).
class CounterRng {
 public:
  explicit CounterRng(std::uint64_t seed) : seed_(seed) {}

  std::uint64_t next_u64();
  /// Uniform on [0, 1) with 53 random bits.
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Standard normal by Box-Muller (one value per call, no caching).
  double normal();

  std::uint64_t seed() const { return seed_; }
  std::uint64_t counter() const { return counter_; }

 private:
  std::uint64_t seed_;
  std::uint64_t counter_ = 0;
};

/// The splitmix64 finaliser.
std::uint64_t splitmix64(std::uint64_t x);

/// Derives an independent stream seed from a parent seed and a stream id.
std::uint64_t derive_seed(std::uint64_t parent, std::uint64_t stream);

}  // namespace fracwave
