#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "marginlab/errors.hpp"
#include "marginlab/linalg.hpp"
#include "marginlab/rng.hpp"
#include "marginlab/sets.hpp"

namespace marginlab {

struct MarginResult {
  double value = 0.0;
  Vector sigma_star;
  Vector projection;    // z, the lq projection of A*sigma_star onto E
  Vector residual;      // v = A*sigma_star - z
  Vector abs_residual;  // |v|
  bool exact = false;
  double q_used = 2.0;
};

struct MarginGradient {
  Matrix entries;  // |d margin / d A_ij|
  Vector sigma_star;
  bool well_defined = true;
};

struct MarginOptions {
  std::uint64_t enumeration_cap = kDefaultEnumerationCap;
  // At or below this cardinality the solver walks candidates in enumeration
  // order with fresh per-candidate arithmetic, which makes it agree
  // bit-for-bit with a plain brute-force loop over enumerate_feasible +
  // lq_distance. Above it, a Gray-code sweep with incremental image updates
  // is used (same minimum up to ~1e-12 accumulation).
  std::uint64_t slow_path_max = 1ull << 12;
};

// Finite substitute for q = inf: ceil(log(M)^2) clamped to >= 2.
inline double effective_exponent(std::size_t m, double q) {
  if (m < 2) throw std::invalid_argument("effective_exponent: M must be >= 2");
  check_exponent(q);
  if (!is_inf_exponent(q)) return q;
  const double lm = std::log(static_cast<double>(m));
  return std::max(2.0, std::ceil(lm * lm));
}

namespace detail {

inline double ipow(double x, unsigned e) {
  double r = 1.0;
  while (e) {
    if (e & 1u) r *= x;
    x *= x;
    e >>= 1;
  }
  return r;
}

// Exponent descriptor for the sweep kernels, with an integer fast path.
struct QAgg {
  double q;
  bool inf;
  bool integral;
  unsigned iq;

  explicit QAgg(double q_in)
      : q(q_in), inf(is_inf_exponent(q_in)),
        integral(!inf && q_in == std::floor(q_in) && q_in <= 64.0),
        iq(integral ? static_cast<unsigned>(q_in) : 0) {}

  double pow_q(double r) const { return integral ? ipow(r, iq) : std::pow(r, q); }
};

struct SweepBest {
  double key = kInf;  // max residual for inf, sum of q-th powers otherwise
  std::uint64_t pattern = 0;
};

// Gray-code sweep over the scaled hypercube. Visits all 2^N sign patterns
// with O(M) work per candidate, tracking the running minimum for every
// requested exponent at once. Ties resolve to the smaller enumeration index
// (the pattern integer), matching the slow path's first-encountered rule.
// The image vector is rebuilt from scratch every few thousand steps to keep
// rounding drift out of the incremental updates.
template <typename DistFn>
std::vector<SweepBest> hypercube_sweep(const Matrix& a, std::size_t n,
                                       std::span<const QAgg> qs, DistFn&& coord_dist) {
  const std::size_t m = a.rows();
  const double scale = 1.0 / std::sqrt(static_cast<double>(n));
  // flip columns: 2 * scale * A(:,j), contiguous per j
  std::vector<double> flip(n * m);
  for (std::size_t j = 0; j < n; ++j)
    for (std::size_t i = 0; i < m; ++i) flip[j * m + i] = 2.0 * scale * a(i, j);

  std::vector<double> sigma(n, scale), y(m), r(m);
  matvec(a, std::span<const double>(sigma), std::span<double>(y));

  std::vector<SweepBest> best(qs.size());
  const std::uint64_t total = 1ull << n;
  constexpr std::uint64_t kRefresh = 4096;

  std::uint64_t pattern = 0;
  for (std::uint64_t t = 0;; ++t) {
    double rmax = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      r[i] = coord_dist(i, y[i]);
      rmax = std::max(rmax, r[i]);
    }
    for (std::size_t k = 0; k < qs.size(); ++k) {
      const QAgg& qa = qs[k];
      double key;
      if (qa.inf) {
        key = rmax;
      } else {
        // sum r^q >= rmax^q, so candidates whose max residual alone beats the
        // incumbent are skipped without the powered sum
        if (qa.pow_q(rmax) > best[k].key) continue;
        key = 0.0;
        for (std::size_t i = 0; i < m; ++i) key += qa.pow_q(r[i]);
        if (!std::isfinite(key)) {
          // overflow in direct powering; fall back to the scaled norm
          const double nv = lq_norm(std::span<const double>(r), qa.q);
          key = (nv == kInf) ? kInf : std::numeric_limits<double>::max();
        }
      }
      if (key < best[k].key || (key == best[k].key && pattern < best[k].pattern)) {
        best[k].key = key;
        best[k].pattern = pattern;
      }
    }
    if (t + 1 == total) break;
    const unsigned j = static_cast<unsigned>(std::countr_zero(t + 1));
    pattern ^= (1ull << j);
    const double* fc = flip.data() + j * m;
    if ((pattern >> j) & 1ull) {
      for (std::size_t i = 0; i < m; ++i) y[i] -= fc[i];
    } else {
      for (std::size_t i = 0; i < m; ++i) y[i] += fc[i];
    }
    if ((t + 1) % kRefresh == 0) {
      for (std::size_t jj = 0; jj < n; ++jj)
        sigma[jj] = ((pattern >> jj) & 1ull) ? -scale : scale;
      matvec(a, std::span<const double>(sigma), std::span<double>(y));
    }
  }
  return best;
}

inline MarginResult result_at(const Matrix& a, const Vector& sigma, const ConstraintSet& e,
                              double q, bool exact) {
  MarginResult res;
  res.sigma_star = sigma;
  Vector y = matvec(a, sigma);
  DistanceResult d = lq_distance(e, y, q);
  res.value = d.dist;
  res.projection = std::move(d.projection);
  res.residual = std::move(d.residual);
  res.abs_residual = std::move(d.abs_residual);
  res.exact = exact;
  res.q_used = q;
  return res;
}

}  // namespace detail

// Exact margin for every requested exponent in one enumeration of Q.
// Minimum over all sigma in Q of d_q(A sigma, E); ties break to the first
// sigma in enumeration order.
inline std::vector<MarginResult> margin_exact_multi(const Matrix& a, const FeasibleSet& q_set,
                                                    const ConstraintSet& e,
                                                    std::span<const double> qs,
                                                    const MarginOptions& opts = {}) {
  if (a.cols() != q_set.dim()) throw std::invalid_argument("margin: A columns != dim Q");
  if (a.rows() != e.dim()) throw std::invalid_argument("margin: A rows != dim E");
  if (qs.empty()) throw std::invalid_argument("margin: no exponents requested");
  for (double q : qs) check_exponent(q);

  Enumerator en = enumerate_feasible(q_set, opts.enumeration_cap);

  const bool fast_ok = q_set.is_hypercube() && en.size() > opts.slow_path_max &&
                       q_set.dim() < 64 && e.coordinatewise();
  std::vector<MarginResult> out;
  out.reserve(qs.size());

  if (fast_ok) {
    std::vector<detail::QAgg> aggs;
    aggs.reserve(qs.size());
    for (double q : qs) aggs.emplace_back(q);
    const detail::CoordTable table = detail::build_coord_table(e);
    const std::size_t n = q_set.dim();
    const bool single_interval =
        std::all_of(table.index.begin(), table.index.end(),
                    [](const auto& oc) { return oc.second == 1; });
    std::vector<detail::SweepBest> best;
    if (single_interval) {
      // branchless per-coordinate distance to one closed interval
      std::vector<double> lo(a.rows()), hi(a.rows());
      for (std::size_t i = 0; i < a.rows(); ++i) {
        const Interval iv = table.coord(i).front();
        lo[i] = iv.lo;
        hi[i] = iv.hi;
      }
      best = detail::hypercube_sweep(a, n, std::span<const detail::QAgg>(aggs),
                                     [&lo, &hi](std::size_t i, double y) {
                                       return std::max({0.0, lo[i] - y, y - hi[i]});
                                     });
    } else {
      best = detail::hypercube_sweep(
          a, n, std::span<const detail::QAgg>(aggs),
          [&table](std::size_t i, double y) { return table.dist(i, y); });
    }
    for (std::size_t k = 0; k < qs.size(); ++k)
      out.push_back(detail::result_at(a, q_set.member(best[k].pattern), e, qs[k], true));
    return out;
  }

  // Slow path: candidates in enumeration order, fresh arithmetic per
  // candidate. Bit-for-bit identical to a brute-force loop over
  // enumerate_feasible + lq_distance.
  Vector sigma(q_set.dim()), y(a.rows());
  for (double q : qs) {
    double best = kInf;
    std::uint64_t best_k = 0;
    for (std::uint64_t k = 0; k < en.size(); ++k) {
      en.member(k, std::span<double>(sigma));
      matvec(a, std::span<const double>(sigma), std::span<double>(y));
      const double d = lq_distance(e, y, q).dist;
      if (d < best) {
        best = d;
        best_k = k;
      }
    }
    out.push_back(detail::result_at(a, en.member(best_k), e, q, true));
  }
  return out;
}

inline MarginResult margin_exact(const Matrix& a, const FeasibleSet& q_set,
                                 const ConstraintSet& e, double q,
                                 const MarginOptions& opts = {}) {
  const double qs[1] = {q};
  auto results = margin_exact_multi(a, q_set, e, qs, opts);
  return std::move(results.front());
}

// All enumerated candidates whose distance is within `gap` of the minimum.
// Used to detect non-unique minimizers before finite-difference checks.
struct NearMinimizer {
  std::uint64_t index;
  double value;
  Vector sigma;
};

inline std::vector<NearMinimizer> near_minimizers(const Matrix& a, const FeasibleSet& q_set,
                                                  const ConstraintSet& e, double q, double gap,
                                                  const MarginOptions& opts = {}) {
  Enumerator en = enumerate_feasible(q_set, opts.enumeration_cap);
  Vector sigma(q_set.dim()), y(a.rows());
  std::vector<double> vals(static_cast<std::size_t>(en.size()));
  double best = kInf;
  for (std::uint64_t k = 0; k < en.size(); ++k) {
    en.member(k, std::span<double>(sigma));
    matvec(a, std::span<const double>(sigma), std::span<double>(y));
    vals[static_cast<std::size_t>(k)] = lq_distance(e, y, q).dist;
    best = std::min(best, vals[static_cast<std::size_t>(k)]);
  }
  std::vector<NearMinimizer> out;
  for (std::uint64_t k = 0; k < en.size(); ++k) {
    if (vals[static_cast<std::size_t>(k)] <= best + gap)
      out.push_back({k, vals[static_cast<std::size_t>(k)], en.member(k)});
  }
  return out;
}

// True when every candidate within `gap` of the minimum shares one
// (|sigma|, |v|) fingerprint. The envelope derivative depends only on those
// absolute values, so sign-symmetric ties (sigma vs -sigma under symmetric E)
// do not spoil differentiability, while genuinely distinct near-minimizers
// do; finite-difference checks filter on this.
inline bool unique_minimizer(const Matrix& a, const FeasibleSet& q_set, const ConstraintSet& e,
                             double q, double gap, const MarginOptions& opts = {}) {
  const auto near = near_minimizers(a, q_set, e, q, gap, opts);
  constexpr double kFpTol = 1e-9;
  const auto& ref = near.front();
  Vector ref_abs_v = lq_distance(e, matvec(a, ref.sigma), q).abs_residual;
  for (std::size_t i = 1; i < near.size(); ++i) {
    const auto& cand = near[i];
    for (std::size_t j = 0; j < ref.sigma.size(); ++j)
      if (std::abs(std::abs(cand.sigma[j]) - std::abs(ref.sigma[j])) > kFpTol) return false;
    Vector abs_v = lq_distance(e, matvec(a, cand.sigma), q).abs_residual;
    for (std::size_t j = 0; j < abs_v.size(); ++j)
      if (std::abs(abs_v[j] - ref_abs_v[j]) > kFpTol) return false;
  }
  return true;
}

// Closed form for Q = unit sphere, E = {0}, q = 2: the margin is the
// smallest singular value of A, attained at the matching right singular
// vector. Computed from the Gram matrix A^T A by cyclic Jacobi.
inline MarginResult margin_sphere_l2(const Matrix& a) {
  const std::size_t n = a.cols();
  Matrix gram(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i; j < n; ++j) {
      double s = 0.0;
      for (std::size_t r = 0; r < a.rows(); ++r) s += a(r, i) * a(r, j);
      gram(i, j) = s;
      gram(j, i) = s;
    }
  }
  EigenDecomposition ed = jacobi_eigen(gram);
  Vector sigma(n);
  for (std::size_t i = 0; i < n; ++i) sigma[i] = ed.eigenvectors(i, n - 1);
  // ||A sigma||_2 at the computed eigenvector is second-order accurate in the
  // eigenvector error, unlike sqrt of the smallest Gram eigenvalue
  return detail::result_at(a, sigma, ConstraintSet::singleton_zero(a.rows()), 2.0, true);
}

struct SphereSolverOptions {
  std::size_t restarts = 32;
  std::size_t steps = 3000;
  double initial_step = 0.5;
  double step_decay = 0.995;
  std::uint64_t seed = 0;
};

// Projected subgradient descent on the unit sphere. Heuristic: the returned
// value is an upper bound on the true margin (any feasible point certifies
// one); exact = false.
inline MarginResult margin_continuous(const Matrix& a, const ConstraintSet& e, double q,
                                      const SphereSolverOptions& opts = {}) {
  check_exponent(q);
  const std::size_t n = a.cols();
  const std::size_t m = a.rows();
  if (m != e.dim()) throw std::invalid_argument("margin_continuous: A rows != dim E");

  RandomStream root(opts.seed);
  double best_val = kInf;
  Vector best_sigma;

  Vector sigma(n), y(m), gx(m), gsigma(n);
  for (std::size_t r = 0; r < opts.restarts; ++r) {
    RandomStream stream = root.substream(r);
    for (double& s : sigma) s = stream.next_gaussian();
    double nrm = norm2(sigma);
    if (nrm == 0.0) {
      sigma[0] = 1.0;
      nrm = 1.0;
    }
    for (double& s : sigma) s /= nrm;

    double step = opts.initial_step;
    for (std::size_t t = 0; t <= opts.steps; ++t) {
      matvec(a, std::span<const double>(sigma), std::span<double>(y));
      DistanceResult d = lq_distance(e, y, q);
      if (!std::isfinite(d.dist))
        throw numerical_error("margin_continuous: non-finite objective in iterates");
      if (d.dist < best_val) {
        best_val = d.dist;
        best_sigma = sigma;
      }
      if (t == opts.steps || best_val == 0.0) break;

      // subgradient of d_q(., E) at y
      if (d.dist == 0.0) {
        std::fill(gx.begin(), gx.end(), 0.0);
      } else if (is_inf_exponent(q)) {
        std::size_t imax = 0;
        for (std::size_t i = 1; i < m; ++i)
          if (d.abs_residual[i] > d.abs_residual[imax]) imax = i;
        std::fill(gx.begin(), gx.end(), 0.0);
        gx[imax] = (d.residual[imax] >= 0.0) ? 1.0 : -1.0;
      } else {
        for (std::size_t i = 0; i < m; ++i) {
          const double ratio = d.abs_residual[i] / d.dist;
          const double w = std::pow(ratio, q - 1.0);
          gx[i] = (d.residual[i] >= 0.0) ? w : -w;
        }
      }
      // pull back through A and project to the sphere
      for (std::size_t j = 0; j < n; ++j) {
        double s = 0.0;
        for (std::size_t i = 0; i < m; ++i) s += a(i, j) * gx[i];
        gsigma[j] = s;
      }
      for (std::size_t j = 0; j < n; ++j) sigma[j] -= step * gsigma[j];
      nrm = norm2(sigma);
      if (!(nrm > 1e-12)) {
        for (double& s : sigma) s = stream.next_gaussian();
        nrm = norm2(sigma);
      }
      for (double& s : sigma) s /= nrm;
      for (double s : sigma)
        if (!std::isfinite(s)) throw numerical_error("margin_continuous: NaN in iterates");
      step *= opts.step_decay;
    }
    if (best_val == 0.0) break;
  }

  MarginResult res = detail::result_at(a, best_sigma, e, q, false);
  return res;
}

// |gradient| of the margin in the matrix entries:
//   |d margin / d A_ij| = |sigma*_j| * (|v_i| / ||v||_q)^(q-1).
// Requires a finite exponent; for q = inf resolve the margin at
// effective_exponent(M, inf) first and pass exponent_substituted = true so
// the result is flagged as an approximation.
inline MarginGradient margin_gradient(const MarginResult& result, double q,
                                      bool exponent_substituted = false) {
  check_exponent(q);
  if (is_inf_exponent(q))
    throw std::invalid_argument(
        "margin_gradient: q = inf has no pointwise formula; substitute q' = "
        "effective_exponent(M, inf) and re-solve the margin at q'");
  const std::size_t m = result.residual.size();
  const std::size_t n = result.sigma_star.size();
  MarginGradient g;
  g.sigma_star = result.sigma_star;
  g.entries = Matrix(m, n);
  g.well_defined = !exponent_substituted;
  const double vq = lq_norm(result.residual, q);
  if (vq == 0.0) return g;  // margin at a zero of a nonnegative function
  for (std::size_t i = 0; i < m; ++i) {
    const double w = std::pow(result.abs_residual[i] / vq, q - 1.0);
    for (std::size_t j = 0; j < n; ++j)
      g.entries(i, j) = std::abs(result.sigma_star[j]) * w;
  }
  return g;
}

// Central finite differences of the exact margin in every matrix entry.
// Oracle for margin_gradient; signs are not comparable (the formula gives
// absolute values), so callers compare magnitudes.
inline Matrix finite_diff_gradient(const Matrix& a, const FeasibleSet& q_set,
                                   const ConstraintSet& e, double q, double h,
                                   const MarginOptions& opts = {}) {
  if (!(h > 0.0)) throw std::invalid_argument("finite_diff_gradient: h must be > 0");
  Matrix g(a.rows(), a.cols());
  Matrix pert = a;
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t j = 0; j < a.cols(); ++j) {
      pert(i, j) = a(i, j) + h;
      const double up = margin_exact(pert, q_set, e, q, opts).value;
      pert(i, j) = a(i, j) - h;
      const double dn = margin_exact(pert, q_set, e, q, opts).value;
      pert(i, j) = a(i, j);
      g(i, j) = (up - dn) / (2.0 * h);
    }
  }
  return g;
}

}  // namespace marginlab
