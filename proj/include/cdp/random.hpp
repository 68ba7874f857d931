#pragma once

#include "cdp/types.hpp"

#include <cmath>
#include <numbers>
#include <numeric>
#include <random>

namespace cdp {

/// splitmix64 finalizer; bijective on 64-bit words.
inline std::uint64_t splitmix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ull;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

/// Per-job seed, injective in (cell, trial) for a fixed master seed as long
/// as both stay below 2^32.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t cell,
                                 std::uint64_t trial) {
  return splitmix64(master + 0x9e3779b97f4a7c15ull * ((cell << 32) + trial + 1));
}

/// Deterministic random source. Gaussians come from an explicit Box-Muller
/// transform on top of mt19937_64 so value streams do not depend on the
/// standard library's distribution implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  std::uint64_t bits() { return eng_(); }

  /// Uniform on [0, 1).
  double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

  /// Uniform integer in [0, bound). Modulo bias is below bound/2^64.
  Index uniform_index(Index bound) {
    return static_cast<Index>(eng_() % static_cast<std::uint64_t>(bound));
  }

  double gaussian() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    const double u1 = 1.0 - uniform();  // (0, 1]
    const double u2 = uniform();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    spare_ = radius * std::sin(angle);
    have_spare_ = true;
    return radius * std::cos(angle);
  }

  /// Standard complex gaussian CN(0,1): E|z|^2 = 1.
  Complex cgaussian() {
    const double re = gaussian();
    const double im = gaussian();
    return Complex(re, im) * std::numbers::sqrt2 / 2.0;
  }

 private:
  std::mt19937_64 eng_;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

/// s distinct indices drawn uniformly from {0,...,n-1}, returned sorted.
inline std::vector<Index> sample_without_replacement(Index n, Index s, Rng& rng) {
  std::vector<Index> pool(static_cast<std::size_t>(n));
  std::iota(pool.begin(), pool.end(), Index{0});
  for (Index i = 0; i < s; ++i) {
    const Index j = i + rng.uniform_index(n - i);
    std::swap(pool[static_cast<std::size_t>(i)], pool[static_cast<std::size_t>(j)]);
  }
  pool.resize(static_cast<std::size_t>(s));
  std::sort(pool.begin(), pool.end());
  return pool;
}

}  // namespace cdp
