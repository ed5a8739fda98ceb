#include "depthsynth/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace depthsynth {

std::uint64_t mix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t hash_string(std::string_view text) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const char c : text) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t derive_seed(std::uint64_t base, std::string_view tag, std::uint64_t index) noexcept {
  std::uint64_t h = mix64(base);
  h = mix64(h ^ hash_string(tag));
  return mix64(h ^ mix64(index));
}

std::uint64_t SeededRng::below(std::uint64_t n) {
  // Rejection keeps the draw unbiased for every n.
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % n;
  std::uint64_t x = engine_();
  while (x >= limit) x = engine_();
  return x % n;
}

double SeededRng::log_uniform(double lo, double hi) {
  if (lo == hi) return lo;
  const double a = std::log(lo);
  const double b = std::log(hi);
  const double v = std::exp(a + uniform() * (b - a));
  return std::min(std::max(v, lo), hi);
}

}  // namespace depthsynth
