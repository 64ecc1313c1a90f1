#pragma once

#include <pertflow/types.hpp>

#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <numeric>
#include <random>
#include <vector>

namespace pertflow {

// splitmix64 mixer; used to derive independent stream seeds from a base seed.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

// Deterministic random source. Every draw is built directly on the raw
// mt19937_64 output stream, so sequences are identical across platforms and
// standard libraries (std::*_distribution is implementation-defined and is
// deliberately not used).
//
// Draw order is part of the contract:
//   nextUnitHalfOpen / nextUnitOpenClosed consume one engine word;
//   nextBounded consumes one word per rejection round;
//   nextGaussian consumes two words (Box-Muller) and caches the sine variate,
//   so consecutive calls consume 2, 0, 2, 0, ... words.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t nextU64() { return engine_(); }

  // Uniform on [0, 1), 53-bit resolution.
  double nextUnitHalfOpen() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  // Uniform on (0, 1]; never zero, safe under log().
  double nextUnitOpenClosed() {
    return 1.0 - static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  double nextUniform(double lo, double hi) {
    return lo + (hi - lo) * nextUnitHalfOpen();
  }

  // Uniform on {0, ..., bound-1}, unbiased via rejection.
  std::uint64_t nextBounded(std::uint64_t bound) {
    if (bound == 0) throw ValidationError("nextBounded: bound must be positive");
    const std::uint64_t threshold = (0 - bound) % bound;  // 2^64 mod bound
    for (;;) {
      const std::uint64_t r = engine_();
      if (r >= threshold) return r % bound;
    }
  }

  // Standard normal via Box-Muller: u1 on (0,1], u2 on [0,1);
  // returns sqrt(-2 ln u1) cos(2 pi u2) first, caches the sine variate.
  double nextGaussian() {
    if (has_cached_) {
      has_cached_ = false;
      return cached_;
    }
    const double u1 = nextUnitOpenClosed();
    const double u2 = nextUnitHalfOpen();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * std::numbers::pi * u2;
    cached_ = r * std::sin(a);
    has_cached_ = true;
    return r * std::cos(a);
  }

 private:
  std::mt19937_64 engine_;
  double cached_ = 0.0;
  bool has_cached_ = false;
};

// First k entries of a Fisher-Yates shuffle of {0, ..., n-1}; draw order preserved.
inline std::vector<Index> sampleWithoutReplacement(Index n, Index k, Rng& rng) {
  if (k > n) throw ValidationError("sampleWithoutReplacement: k exceeds n");
  std::vector<Index> idx(static_cast<std::size_t>(n));
  std::iota(idx.begin(), idx.end(), Index{0});
  for (Index i = 0; i < k; ++i) {
    const auto j = i + static_cast<Index>(
        rng.nextBounded(static_cast<std::uint64_t>(n - i)));
    std::swap(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(j)]);
  }
  idx.resize(static_cast<std::size_t>(k));
  return idx;
}

inline std::vector<Index> sampleWithReplacement(Index n, Index k, Rng& rng) {
  std::vector<Index> idx(static_cast<std::size_t>(k));
  for (auto& i : idx) i = static_cast<Index>(rng.nextBounded(static_cast<std::uint64_t>(n)));
  return idx;
}

}  // namespace pertflow
