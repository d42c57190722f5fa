#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <vector>

#include "marginlab/rng.hpp"

namespace marginlab {

inline double mean(std::span<const double> x) {
  if (x.empty()) throw std::invalid_argument("mean: empty sample");
  double s = 0.0;
  for (double v : x) s += v;
  return s / static_cast<double>(x.size());
}

// Unbiased sample variance (n - 1 denominator).
inline double sample_variance(std::span<const double> x) {
  if (x.size() < 2) throw std::invalid_argument("sample_variance: need >= 2 samples");
  const double m = mean(x);
  double s = 0.0;
  for (double v : x) s += (v - m) * (v - m);
  return s / static_cast<double>(x.size() - 1);
}

// Standard error of the sample variance from central moments:
//   Var(s^2) = (m4 - m2^2 (n-3)/(n-1)) / n.
inline double variance_standard_error(std::span<const double> x) {
  const std::size_t n = x.size();
  if (n < 2) throw std::invalid_argument("variance_standard_error: need >= 2 samples");
  const double m = mean(x);
  double m2 = 0.0, m4 = 0.0;
  for (double v : x) {
    const double d = (v - m) * (v - m);
    m2 += d;
    m4 += d * d;
  }
  m2 /= static_cast<double>(n);
  m4 /= static_cast<double>(n);
  const double nn = static_cast<double>(n);
  const double var_of_var = (m4 - m2 * m2 * (nn - 3.0) / (nn - 1.0)) / nn;
  return std::sqrt(std::max(0.0, var_of_var));
}

struct Interval95 {
  double lo = 0.0;
  double hi = 0.0;
};

// Percentile bootstrap CI for the variance; deterministic given the seed.
inline Interval95 bootstrap_variance_ci(std::span<const double> x, std::uint64_t seed,
                                        std::size_t resamples = 1000) {
  if (x.size() < 2) throw std::invalid_argument("bootstrap_variance_ci: need >= 2 samples");
  RandomStream stream(seed);
  const std::size_t n = x.size();
  std::vector<double> vars(resamples);
  std::vector<double> boot(n);
  for (std::size_t b = 0; b < resamples; ++b) {
    for (std::size_t i = 0; i < n; ++i)
      boot[i] = x[stream.next_u64() % n];
    vars[b] = sample_variance(boot);
  }
  std::sort(vars.begin(), vars.end());
  const auto pick = [&](double p) {
    const double pos = p * static_cast<double>(resamples - 1);
    const std::size_t lo = static_cast<std::size_t>(pos);
    const std::size_t hi = std::min(lo + 1, resamples - 1);
    const double frac = pos - static_cast<double>(lo);
    return vars[lo] * (1.0 - frac) + vars[hi] * frac;
  };
  return {pick(0.025), pick(0.975)};
}

// Pool-adjacent-violators: least-squares nondecreasing fit with weights 1.
inline std::vector<double> isotonic_nondecreasing(std::span<const double> y) {
  const std::size_t n = y.size();
  std::vector<double> level(n), weight(n);
  std::vector<std::size_t> len(n);
  std::size_t blocks = 0;
  for (std::size_t i = 0; i < n; ++i) {
    level[blocks] = y[i];
    weight[blocks] = 1.0;
    len[blocks] = 1;
    ++blocks;
    while (blocks > 1 && level[blocks - 2] > level[blocks - 1]) {
      const double w = weight[blocks - 2] + weight[blocks - 1];
      level[blocks - 2] =
          (level[blocks - 2] * weight[blocks - 2] + level[blocks - 1] * weight[blocks - 1]) / w;
      weight[blocks - 2] = w;
      len[blocks - 2] += len[blocks - 1];
      --blocks;
    }
  }
  std::vector<double> out;
  out.reserve(n);
  for (std::size_t b = 0; b < blocks; ++b)
    out.insert(out.end(), len[b], level[b]);
  return out;
}

// First x where the piecewise-linear curve through (xs, ys) reaches `target`
// going up; NaN when the curve never crosses it.
inline double crossing_point(std::span<const double> xs, std::span<const double> ys,
                             double target) {
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (ys[i] >= target) {
      if (i == 0) return xs[0];
      const double dy = ys[i] - ys[i - 1];
      if (dy <= 0.0) return xs[i];
      const double f = (target - ys[i - 1]) / dy;
      return xs[i - 1] + f * (xs[i] - xs[i - 1]);
    }
  }
  return std::numeric_limits<double>::quiet_NaN();
}

// Two-sample Kolmogorov-Smirnov distance; tied values advance both empirical
// CDFs together.
inline double ks_distance(std::vector<double> a, std::vector<double> b) {
  if (a.empty() || b.empty()) throw std::invalid_argument("ks_distance: empty sample");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  double d = 0.0;
  std::size_t i = 0, j = 0;
  while (i < a.size() && j < b.size()) {
    const double t = std::min(a[i], b[j]);
    while (i < a.size() && a[i] == t) ++i;
    while (j < b.size() && b[j] == t) ++j;
    const double fa = static_cast<double>(i) / static_cast<double>(a.size());
    const double fb = static_cast<double>(j) / static_cast<double>(b.size());
    d = std::max(d, std::abs(fa - fb));
  }
  return d;
}

}  // namespace marginlab
