#pragma once

#include <cmath>
#include <span>
#include <stdexcept>
#include <vector>

#include "marginlab/margin.hpp"
#include "marginlab/sets.hpp"

namespace marginlab {

// All bound evaluators return the universal-constant-free normalization
// (C = 1). Reports compare ratios, never pass/fail on absolute constants.

// Variance bound for a permutation-symmetric constraint set:
//   1 / (1 + (1/2 - 1/q) log M), with 1/inf = 0.
inline double theorem1_bound(std::size_t m, double q) {
  if (m < 1) throw std::invalid_argument("theorem1_bound: M must be >= 1");
  check_exponent(q);
  const double inv_q = is_inf_exponent(q) ? 0.0 : 1.0 / q;
  return 1.0 / (1.0 + (0.5 - inv_q) * std::log(static_cast<double>(m)));
}

// Block-symmetric variant: 1 / (1 + (1/2) log(max(m^(1-2/q) / k, 1))) with
// m the smallest block size and k the number of blocks.
inline double block_bound(std::span<const std::size_t> block_sizes, double q) {
  if (block_sizes.empty()) throw std::invalid_argument("block_bound: empty block list");
  check_exponent(q);
  std::size_t m = block_sizes.front();
  for (std::size_t s : block_sizes) {
    if (s < 1) throw std::invalid_argument("block_bound: block sizes must be >= 1");
    m = std::min(m, s);
  }
  const double inv_q = is_inf_exponent(q) ? 0.0 : 1.0 / q;
  const double k = static_cast<double>(block_sizes.size());
  const double arg = std::pow(static_cast<double>(m), 1.0 - 2.0 * inv_q) / k;
  return 1.0 / (1.0 + 0.5 * std::log(std::max(arg, 1.0)));
}

inline double block_bound(const std::vector<std::size_t>& block_sizes, double q) {
  return block_bound(std::span<const std::size_t>(block_sizes), q);
}

struct TalagrandSums {
  double sum_a2 = 0.0;  // sum over entries of (mean |gradient entry|)^2
  double sum_b2 = 0.0;  // sum over entries of mean of squared gradient entries
};

// Empirical L1/L2 derivative sums from gradient samples. Entries are already
// absolute values, so the mean of entries estimates E|d margin/dA_ij|.
inline TalagrandSums talagrand_sums(std::span<const MarginGradient> samples) {
  if (samples.size() < 2) throw std::invalid_argument("talagrand_sums: need >= 2 samples");
  const Matrix& first = samples.front().entries;
  for (const auto& g : samples)
    if (!g.entries.same_shape(first))
      throw std::invalid_argument("talagrand_sums: sample dimension mismatch");
  const double inv_n = 1.0 / static_cast<double>(samples.size());
  TalagrandSums out;
  for (std::size_t i = 0; i < first.rows(); ++i) {
    for (std::size_t j = 0; j < first.cols(); ++j) {
      double s1 = 0.0, s2 = 0.0;
      for (const auto& g : samples) {
        const double x = g.entries(i, j);
        s1 += x;
        s2 += x * x;
      }
      out.sum_a2 += (s1 * inv_n) * (s1 * inv_n);
      out.sum_b2 += s2 * inv_n;
    }
  }
  return out;
}

inline TalagrandSums talagrand_sums(const std::vector<MarginGradient>& samples) {
  return talagrand_sums(std::span<const MarginGradient>(samples));
}

// Gaussian Poincare right-hand side: mean over samples of the squared
// gradient Frobenius norm. Identical to sum_b2.
inline double poincare_rhs(std::span<const MarginGradient> samples) {
  return talagrand_sums(samples).sum_b2;
}

inline double poincare_rhs(const std::vector<MarginGradient>& samples) {
  return poincare_rhs(std::span<const MarginGradient>(samples));
}

struct L1L2Bound {
  double value = 0.0;
  // sum_a2 = 0 makes the log ratio infinite and the bound vacuous
  bool degenerate = false;
};

// L1-L2 variance bound (C = 1): sum_b2 / (1 + (1/2) log(sum_b2 / sum_a2)),
// the ratio clamped at >= 1.
inline L1L2Bound l1l2_rhs(double sum_a2, double sum_b2) {
  if (sum_a2 < 0.0 || sum_b2 < 0.0)
    throw std::invalid_argument("l1l2_rhs: sums must be nonnegative");
  if (sum_a2 == 0.0) return {0.0, true};
  const double ratio = std::max(sum_b2 / sum_a2, 1.0);
  return {sum_b2 / (1.0 + 0.5 * std::log(ratio)), false};
}

struct BoundReport {
  double theorem1_value = 0.0;
  double block_value = 0.0;  // NaN when E has no full/blocks symmetry
  double poincare_rhs = 0.0;
  double l1l2_rhs = 0.0;
  double sum_a2 = 0.0;
  double sum_b2 = 0.0;
  bool l1l2_degenerate = false;
};

}  // namespace marginlab
