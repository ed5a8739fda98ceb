#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace depthsynth {

/// splitmix64 finalizer.
std::uint64_t mix64(std::uint64_t x) noexcept;

/// Stable 64-bit FNV-1a; unlike std::hash it is identical across platforms.
std::uint64_t hash_string(std::string_view text) noexcept;

/// Seed for one independent random stream: hash(base, tag, index). Streams
/// derived this way do not depend on the order in which they are created.
std::uint64_t derive_seed(std::uint64_t base, std::string_view tag, std::uint64_t index) noexcept;

/// Per-call random source. mt19937_64 output is fixed by the standard; the
/// conversions below are written out so results do not depend on the
/// standard library's distribution implementations.
class SeededRng {
 public:
  explicit SeededRng(std::uint64_t seed) : seed_(seed), engine_(seed) {}

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t next_u64() { return engine_(); }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  /// Uniform integer in [0, n); n must be > 0.
  std::uint64_t below(std::uint64_t n);

  /// log-uniform on [lo, hi], 0 < lo <= hi.
  double log_uniform(double lo, double hi);

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
};

}  // namespace depthsynth
