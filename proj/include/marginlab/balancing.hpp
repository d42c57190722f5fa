#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "marginlab/errors.hpp"
#include "marginlab/experiments.hpp"
#include "marginlab/linalg.hpp"
#include "marginlab/rng.hpp"
#include "marginlab/stats.hpp"

namespace marginlab {

// Top eigenvalue is not simple, so the eigenvalue derivative u u^T does not
// exist; callers must handle or avoid the degeneracy.
class degeneracy_error : public std::runtime_error {
 public:
  explicit degeneracy_error(const std::string& what) : std::runtime_error(what) {}
};

struct BalancingInstance {
  std::vector<Matrix> matrices;  // N symmetric d x d
  std::size_t d = 0;
  std::size_t n = 0;
};

inline BalancingInstance sample_balancing_instance(RandomStream& stream, std::size_t d,
                                                   std::size_t n) {
  if (n == 0) throw std::invalid_argument("sample_balancing_instance: need n >= 1");
  BalancingInstance inst;
  inst.d = d;
  inst.n = n;
  inst.matrices.reserve(n);
  for (std::size_t i = 0; i < n; ++i) inst.matrices.push_back(sample_goe(stream, d));
  return inst;
}

namespace detail {

inline void check_symmetric(const Matrix& s) {
  if (s.rows() != s.cols()) throw std::invalid_argument("matrix is not square");
  const double tol = 1e-12 * (1.0 + frobenius_norm(s));
  for (std::size_t i = 0; i < s.rows(); ++i)
    for (std::size_t j = i + 1; j < s.cols(); ++j)
      if (std::abs(s(i, j) - s(j, i)) > tol)
        throw std::invalid_argument("matrix is not symmetric within 1e-12");
}

}  // namespace detail

// Cyclic Jacobi eigendecomposition; eigenvalues descending, orthonormal
// eigenvector columns. Robust at desk scale (d <= a few hundred).
inline EigenDecomposition symmetric_eigen(const Matrix& s) {
  detail::check_symmetric(s);
  return jacobi_eigen(s);
}

inline double operator_norm(const Matrix& s) {
  detail::check_symmetric(s);
  Matrix work = s;
  return max_abs_eigenvalue_inplace(work.data(), work.rows());
}

// d(lambda_max)/dS = u u^T at a simple top eigenvalue, u the unit top
// eigenvector. Entries of S are treated as independent parameters.
inline Matrix eig_gradient(const Matrix& s) {
  EigenDecomposition ed = symmetric_eigen(s);
  const std::size_t d = s.rows();
  if (d >= 2) {
    const double gap = ed.eigenvalues[0] - ed.eigenvalues[1];
    if (gap < 1e-8 * std::max(1e-300, frobenius_norm(s)))
      throw degeneracy_error("eig_gradient: top eigenvalue is degenerate (gap below 1e-8 rel)");
  }
  Matrix g(d, d);
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < d; ++j)
      g(i, j) = ed.eigenvectors(i, 0) * ed.eigenvectors(j, 0);
  return g;
}

struct BalancingResult {
  double disc = 0.0;          // d^(-1/2) * operator norm at the optimum
  Vector sigma_star;          // signs scaled by N^(-1/2)
  double top_eigenvalue = 0.0;  // signed eigenvalue of largest magnitude
  Vector top_eigenvector;
  bool exact = false;
};

namespace detail {

inline BalancingResult balancing_result_at(const BalancingInstance& inst,
                                           std::span<const double> signs, bool exact) {
  const std::size_t d = inst.d;
  const double scale = 1.0 / std::sqrt(static_cast<double>(inst.n));
  Matrix s(d, d);
  for (std::size_t i = 0; i < inst.n; ++i) {
    const double c = signs[i] * scale;
    const Matrix& a = inst.matrices[i];
    for (std::size_t r = 0; r < d; ++r)
      for (std::size_t cidx = 0; cidx < d; ++cidx) s(r, cidx) += c * a(r, cidx);
  }
  EigenDecomposition ed = jacobi_eigen(s);
  std::size_t top = 0;
  for (std::size_t k = 1; k < d; ++k)
    if (std::abs(ed.eigenvalues[k]) > std::abs(ed.eigenvalues[top])) top = k;
  BalancingResult res;
  res.disc = std::abs(ed.eigenvalues[top]) / std::sqrt(static_cast<double>(d));
  res.sigma_star.resize(inst.n);
  for (std::size_t i = 0; i < inst.n; ++i) res.sigma_star[i] = signs[i] * scale;
  res.top_eigenvalue = ed.eigenvalues[top];
  res.top_eigenvector.resize(d);
  for (std::size_t r = 0; r < d; ++r) res.top_eigenvector[r] = ed.eigenvectors(r, top);
  res.exact = exact;
  return res;
}

}  // namespace detail

// Exact minimum of d^(-1/2) ||sum_i sigma_i A_i||_op over the scaled sign
// cube. The objective is invariant under sigma -> -sigma, so enumeration
// fixes the first sign + and walks 2^(N-1) patterns by Gray code, rebuilding
// the running sum periodically to cancel rounding drift.
inline BalancingResult balance_exact(const BalancingInstance& inst) {
  constexpr std::size_t kMaxN = 24;
  if (inst.n > kMaxN)
    throw resource_limit_error("balance_exact: N = " + std::to_string(inst.n) +
                               " exceeds enumeration cap N = 24");
  const std::size_t d = inst.d;
  const std::size_t n = inst.n;
  const double scale = 1.0 / std::sqrt(static_cast<double>(n));

  std::vector<double> signs(n, 1.0);
  // running sum with all signs +
  std::vector<double> s(d * d, 0.0);
  auto rebuild = [&](std::uint64_t pattern) {
    std::fill(s.begin(), s.end(), 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      const double c = (i > 0 && ((pattern >> (i - 1)) & 1ull)) ? -scale : scale;
      const Matrix& a = inst.matrices[i];
      for (std::size_t k = 0; k < d * d; ++k) s[k] += c * a.data()[k];
    }
  };
  rebuild(0);

  std::vector<double> work(d * d);
  double best = kInf;
  std::uint64_t best_pattern = 0;
  std::uint64_t pattern = 0;
  const std::uint64_t total = 1ull << (n - 1);
  for (std::uint64_t t = 0;; ++t) {
    std::copy(s.begin(), s.end(), work.begin());
    const double norm = max_abs_eigenvalue_inplace(work.data(), d);
    if (norm < best || (norm == best && pattern < best_pattern)) {
      best = norm;
      best_pattern = pattern;
    }
    if (t + 1 == total) break;
    const unsigned j = static_cast<unsigned>(std::countr_zero(t + 1));
    pattern ^= (1ull << j);
    // matrix j+1 flips sign
    const Matrix& a = inst.matrices[j + 1];
    const double delta = ((pattern >> j) & 1ull) ? -2.0 * scale : 2.0 * scale;
    for (std::size_t k = 0; k < d * d; ++k) s[k] += delta * a.data()[k];
    if ((t + 1) % 1024 == 0) rebuild(pattern);
  }

  for (std::size_t i = 1; i < n; ++i)
    signs[i] = ((best_pattern >> (i - 1)) & 1ull) ? -1.0 : 1.0;
  return detail::balancing_result_at(inst, signs, true);
}

// Best-of-restarts single-flip descent; upper-bound semantics, exact = false.
inline BalancingResult balance_local_search(const BalancingInstance& inst, std::size_t restarts,
                                            std::size_t max_sweeps, std::uint64_t seed = 0) {
  if (restarts == 0) restarts = 1;
  const std::size_t d = inst.d;
  const std::size_t n = inst.n;
  const double scale = 1.0 / std::sqrt(static_cast<double>(n));
  RandomStream root(seed);

  std::vector<double> signs(n), best_signs(n, 1.0);
  std::vector<double> s(d * d), work(d * d);
  double best = kInf;

  for (std::size_t r = 0; r < restarts; ++r) {
    RandomStream stream = root.substream(r);
    for (double& x : signs) x = (stream.next_u64() & 1ull) ? -1.0 : 1.0;
    std::fill(s.begin(), s.end(), 0.0);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t k = 0; k < d * d; ++k) s[k] += signs[i] * scale * inst.matrices[i].data()[k];
    std::copy(s.begin(), s.end(), work.begin());
    double cur = max_abs_eigenvalue_inplace(work.data(), d);

    for (std::size_t sweep = 0; sweep < max_sweeps; ++sweep) {
      std::size_t flip = n;
      double flip_norm = cur;
      for (std::size_t i = 0; i < n; ++i) {
        const double delta = -2.0 * signs[i] * scale;
        for (std::size_t k = 0; k < d * d; ++k)
          work[k] = s[k] + delta * inst.matrices[i].data()[k];
        const double norm = max_abs_eigenvalue_inplace(work.data(), d);
        if (norm < flip_norm) {
          flip_norm = norm;
          flip = i;
        }
      }
      if (flip == n) break;  // local minimum
      const double delta = -2.0 * signs[flip] * scale;
      for (std::size_t k = 0; k < d * d; ++k) s[k] += delta * inst.matrices[flip].data()[k];
      signs[flip] = -signs[flip];
      cur = flip_norm;
    }
    if (cur < best) {
      best = cur;
      best_signs = signs;
    }
  }
  return detail::balancing_result_at(inst, best_signs, false);
}

struct BalancingReport {
  std::vector<double> discs;       // per trial
  std::vector<double> lambda_top;  // per trial, eigenvalue at the optimum
  double mean = 0.0;
  double variance = 0.0;
  double variance_se = 0.0;
  Interval95 variance_ci;
  double mean_over_sd = 0.0;
  double ratio_mean_sd_sqrtd = 0.0;  // mean / (sd * sqrt(d))
  std::size_t d = 0;
  std::size_t n = 0;
};

// Monte Carlo over GOE instances: per-trial exact disc, concentration
// statistics and the mean/(sd sqrt(d)) ratio.
inline BalancingReport balancing_variance_experiment(std::size_t d, std::size_t n,
                                                     std::size_t trials, std::uint64_t seed,
                                                     std::size_t threads = 0) {
  if (trials < 2) throw std::invalid_argument("balancing_variance_experiment: trials must be >= 2");
  BalancingReport rep;
  rep.d = d;
  rep.n = n;
  rep.discs.resize(trials);
  rep.lambda_top.resize(trials);
  RandomStream root(seed);
  detail::parallel_for(trials, threads, [&](std::size_t t) {
    RandomStream stream = root.substream(t);
    BalancingInstance inst = sample_balancing_instance(stream, d, n);
    BalancingResult res = balance_exact(inst);
    rep.discs[t] = res.disc;
    rep.lambda_top[t] = res.top_eigenvalue;
  });
  const std::span<const double> x(rep.discs);
  rep.mean = mean(x);
  rep.variance = sample_variance(x);
  rep.variance_se = variance_standard_error(x);
  rep.variance_ci = bootstrap_variance_ci(x, hash64(seed, 0x8000000000000001ull));
  const double sd = std::sqrt(rep.variance);
  rep.mean_over_sd = sd > 0.0 ? rep.mean / sd : std::numeric_limits<double>::infinity();
  rep.ratio_mean_sd_sqrtd = rep.mean_over_sd / std::sqrt(static_cast<double>(d));
  return rep;
}

}  // namespace marginlab
