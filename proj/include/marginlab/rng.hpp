#pragma once

#include <bit>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <stdexcept>

#include "marginlab/linalg.hpp"

namespace marginlab {

namespace detail {

// SplitMix64 output function (Steele, Lea, Flood: "Fast Splittable
// Pseudorandom Number Generators"). The generator below is the standard
// splittable design: state walks an odd-increment orbit, outputs are the
// mixed state.
inline constexpr std::uint64_t kGoldenGamma = 0x9E3779B97F4A7C15ull;

inline constexpr std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

// Gamma candidates must be odd; also fix up weak (too regular) bit patterns,
// as in the reference SplitMix implementation.
inline constexpr std::uint64_t mix_gamma(std::uint64_t z) {
  z = (z ^ (z >> 33)) * 0xFF51AFD7ED558CCDull;
  z = (z ^ (z >> 33)) * 0xC4CEB9FE1A85EC53ull;
  z = (z ^ (z >> 33)) | 1ull;
  const int flips = std::popcount(z ^ (z >> 1));
  return (flips < 24) ? z ^ 0xAAAAAAAAAAAAAAAAull : z;
}

}  // namespace detail

// Documented 64-bit mixing function used to derive per-trial sub-stream
// seeds: hash64(seed, t) = mix64(mix64(seed + golden) + t*golden + golden).
inline constexpr std::uint64_t hash64(std::uint64_t seed, std::uint64_t t) {
  using namespace detail;
  return mix64(mix64(seed + kGoldenGamma) + t * kGoldenGamma + kGoldenGamma);
}

// Deterministic Gaussian stream: SplitMix64 uniforms fed through Box-Muller
// on 53-bit doubles. Same (seed, call sequence) gives the same draws; trial
// sub-streams get both a hashed seed and a distinct odd gamma, so they are
// separate orbits of the generator rather than offsets of one sequence.
class RandomStream {
 public:
  explicit RandomStream(std::uint64_t seed)
      : seed_(seed), state_(detail::mix64(seed + detail::kGoldenGamma)),
        gamma_(detail::kGoldenGamma) {}

  RandomStream(std::uint64_t seed, std::uint64_t state, std::uint64_t gamma)
      : seed_(seed), state_(state), gamma_(gamma) {}

  std::uint64_t seed() const { return seed_; }
  std::uint64_t counter() const { return counter_; }

  // Sub-stream for trial t, derived from (seed, t) only. Independent of
  // current stream position, so trials may run in any order.
  RandomStream substream(std::uint64_t t) const {
    const std::uint64_t s = hash64(seed_, 2 * t);
    const std::uint64_t g = detail::mix_gamma(hash64(seed_, 2 * t + 1));
    return RandomStream(s, detail::mix64(s + g), g);
  }

  std::uint64_t next_u64() {
    ++counter_;
    state_ += gamma_;
    return detail::mix64(state_);
  }

  // Uniform on [0,1) with 53 random bits.
  double next_unit() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  // Standard normal via Box-Muller; second draw of each pair is cached.
  double next_gaussian() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    // u1 in (0,1] so the log is finite
    const double u1 = (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53;
    const double u2 = next_unit();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
  }

 private:
  std::uint64_t seed_;
  std::uint64_t state_;
  std::uint64_t gamma_;
  std::uint64_t counter_ = 0;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

// rows x cols matrix of independent standard normal entries, row-major fill
// order.
inline Matrix sample_gaussian_matrix(RandomStream& stream, std::size_t rows,
                                     std::size_t cols) {
  if (rows == 0 || cols == 0)
    throw std::invalid_argument("sample_gaussian_matrix: zero dimension");
  Matrix m(rows, cols);
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < cols; ++j) m(i, j) = stream.next_gaussian();
  return m;
}

inline Vector sample_gaussian_vector(RandomStream& stream, std::size_t n) {
  if (n == 0) throw std::invalid_argument("sample_gaussian_vector: zero dimension");
  Vector v(n);
  for (double& x : v) x = stream.next_gaussian();
  return v;
}

// GOE sample, unnormalized convention: off-diagonal entries N(0,1), diagonal
// entries N(0,2). Upper triangle drawn row by row, mirrored exactly.
inline Matrix sample_goe(RandomStream& stream, std::size_t d) {
  if (d == 0) throw std::invalid_argument("sample_goe: zero dimension");
  Matrix s(d, d);
  const double sqrt2 = std::sqrt(2.0);
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t j = i; j < d; ++j) {
      const double z = stream.next_gaussian();
      if (i == j) {
        s(i, i) = sqrt2 * z;
      } else {
        s(i, j) = z;
        s(j, i) = z;
      }
    }
  }
  return s;
}

}  // namespace marginlab
