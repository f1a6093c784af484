#pragma once

#include <cstdint>
#include <random>

namespace drc {

/// Finalizing mixer from the splitmix64 generator; used to derive
/// well-separated child seeds from (seed, tag, a, b) tuples.
inline std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t tag,
                                 std::uint64_t a = 0, std::uint64_t b = 0) {
  std::uint64_t h = mix64(seed ^ 0x6a09e667f3bcc908ull);
  h = mix64(h ^ tag);
  h = mix64(h ^ a);
  h = mix64(h ^ b);
  return h;
}

/// Deterministic random stream; one per logical consumer so that the draw
/// sequence of one consumer never shifts another's.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed) : gen_(seed) {}

  std::mt19937_64& gen() { return gen_; }

  double uniform(double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(gen_);
  }

  double normal() { return std::normal_distribution<double>(0.0, 1.0)(gen_); }

  /// Uniform draw from [0, 1).
  double unit() {
    return std::uniform_real_distribution<double>(0.0, 1.0)(gen_);
  }

 private:
  std::mt19937_64 gen_;
};

// Stream tags for the scheduler's seed derivation.
inline constexpr std::uint64_t kStreamInit = 1;
inline constexpr std::uint64_t kStreamUpper = 2;
inline constexpr std::uint64_t kStreamTask = 3;
inline constexpr std::uint64_t kStreamSched = 4;

}  // namespace drc
