#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <vector>

#include "fdtk/errors.hpp"

namespace fdtk {

// SplitMix64, used as the one deterministic random stream of the toolkit.
// The i-th output is mix(seed + (i+1) * 0x9E3779B97F4A7C15) with the finalizer
// from Steele et al.'s SplittableRandom, so the stream is a pure function of
// (seed, counter) and bit-reproducible across platforms. Seed 0 is valid.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  // Unbiased integer in [0, n) by Lemire's multiply-with-rejection.
  std::uint64_t bounded(std::uint64_t n) {
    if (n == 0) throw RangeError("bounded(0) is undefined");
    unsigned __int128 m = static_cast<unsigned __int128>(next()) * n;
    auto lo = static_cast<std::uint64_t>(m);
    if (lo < n) {
      const std::uint64_t threshold = (0 - n) % n;
      while (lo < threshold) {
        m = static_cast<unsigned __int128>(next()) * n;
        lo = static_cast<std::uint64_t>(m);
      }
    }
    return static_cast<std::uint64_t>(m >> 64);
  }

  // Uniform double in [0, 1), 53 significant bits.
  double unit() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  // Standard normal via Box-Muller; consumes exactly two draws.
  double normal() {
    const double u1 = 1.0 - unit();  // (0, 1], keeps log finite
    const double u2 = unit();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

 private:
  std::uint64_t state_;
};

// In-place Fisher-Yates: for i from n-1 down to 1, swap a[i] with a[bounded(i+1)].
template <typename T>
void shuffle(std::vector<T>& items, SplitMix64& rng) {
  for (std::size_t i = items.size(); i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(rng.bounded(i));
    std::swap(items[i - 1], items[j]);
  }
}

// k distinct indices from [0, n), returned in ascending order so that k == n
// reproduces the identity. Partial Fisher-Yates over the index array: step i
// swaps position i with position i + bounded(n - i).
std::vector<std::size_t> sample_without_replacement(std::size_t n, std::size_t k,
                                                    SplitMix64& rng);

}  // namespace fdtk
