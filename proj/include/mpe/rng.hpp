#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace mpe {

/// splitmix64 finalizer. Used to derive independent, reproducible seeds.
std::uint64_t mix64(std::uint64_t x);

/// Stable hash of a base seed and a sequence of integer keys
/// (e.g. cycle, iteration, sample index).
std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> keys);

/// Uniform double in [0, 1) obtained directly from a hashed key, without any
/// generator state. Training uses this for per-sample measurement draws.
double hashed_uniform(std::uint64_t base, std::initializer_list<std::uint64_t> keys);

/// Seeded random stream.
///
/// Wraps std::mt19937_64 (whose output sequence is fixed by the standard) and
/// implements the floating-point draws locally, because the standard
/// distributions are not required to produce the same values across library
/// implementations. The number of raw draws is counted so a stream can be
/// checkpointed as (seed, draws) and restored with `discard`.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : seed_(seed), engine_(seed) {}

  std::uint64_t next_u64() {
    ++draws_;
    return engine_();
  }

  /// Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  /// Standard normal via Box-Muller; consumes exactly two raw draws.
  double normal();

  /// Uniform integer in [0, n). Rejection sampling, so unbiased.
  std::uint64_t below(std::uint64_t n);

  std::uint64_t seed() const { return seed_; }
  std::uint64_t draws() const { return draws_; }

  void discard(std::uint64_t n) {
    engine_.discard(n);
    draws_ += n;
  }

 private:
  std::uint64_t seed_;
  std::uint64_t draws_ = 0;
  std::mt19937_64 engine_;
};

}  // namespace mpe
