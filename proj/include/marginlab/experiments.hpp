#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <exception>
#include <limits>
#include <mutex>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "marginlab/bounds.hpp"
#include "marginlab/margin.hpp"
#include "marginlab/rng.hpp"
#include "marginlab/sets.hpp"
#include "marginlab/stats.hpp"

namespace marginlab {

namespace detail {

// Static partition over [0, count); deterministic results regardless of the
// thread count because every worker writes only its own slots.
template <typename Fn>
void parallel_for(std::size_t count, std::size_t threads, Fn&& fn) {
  if (threads == 0) threads = std::max<std::size_t>(1, std::thread::hardware_concurrency());
  threads = std::min(threads, count);
  if (threads <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(threads);
  std::mutex err_mutex;
  std::exception_ptr first_error;
  for (std::size_t w = 0; w < threads; ++w) {
    const std::size_t lo = count * w / threads;
    const std::size_t hi = count * (w + 1) / threads;
    pool.emplace_back([&, lo, hi] {
      try {
        for (std::size_t i = lo; i < hi; ++i) fn(i);
      } catch (...) {
        std::lock_guard lock(err_mutex);
        if (!first_error) first_error = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace detail

struct ExperimentConfig {
  ExperimentConfig(FeasibleSet q_in, ConstraintSet e_in)
      : q_set(std::move(q_in)), e_set(std::move(e_in)) {}

  FeasibleSet q_set;
  ConstraintSet e_set;
  double q = 2.0;
  std::size_t trials = 100;
  std::uint64_t seed = 0;
  SphereSolverOptions sphere;
  MarginOptions margin_opts;
  std::size_t threads = 0;  // 0 = hardware concurrency
  bool collect_gradients = true;
};

struct ConcentrationReport {
  std::vector<double> margins;  // per trial, trial-index order
  double mean = 0.0;
  double variance = 0.0;
  double variance_se = 0.0;
  Interval95 variance_ci;
  BoundReport bounds;
  double var_over_theorem1 = 0.0;
  double mean_over_sd = 0.0;
  std::size_t failed_trials = 0;
  // q' actually differentiated: equals q for finite q, effective_exponent
  // for q = inf on exact feasible sets
  double effective_q = 0.0;
  // largest observed violation of margin(inf) <= margin(q') <= M^(1/q') margin(inf)
  double sandwich_max_violation = 0.0;
};

namespace detail {

struct TrialData {
  double margin = std::numeric_limits<double>::quiet_NaN();
  MarginGradient gradient;  // entries stay empty when not collected
  double sandwich_violation = 0.0;
  bool failed = false;
};

inline void check_config(const ExperimentConfig& cfg) {
  if (cfg.trials < 2) throw std::invalid_argument("experiment: trials must be >= 2");
  check_exponent(cfg.q);
}

inline std::vector<TrialData> run_margin_trials(const ExperimentConfig& cfg,
                                                bool want_gradients) {
  check_config(cfg);
  const std::size_t m = cfg.e_set.dim();
  const std::size_t n = cfg.q_set.dim();
  const bool exact = cfg.q_set.enumerable();
  // cap violations should surface once, not per trial
  if (exact) enumerate_feasible(cfg.q_set, cfg.margin_opts.enumeration_cap);

  // the finite substitute exponent needs M >= 2; a one-row problem has no
  // meaningful gradient report
  const bool substitute = exact && is_inf_exponent(cfg.q) && want_gradients && m >= 2;
  const double q_eff = substitute ? effective_exponent(m, cfg.q) : cfg.q;
  const double sandwich_factor =
      substitute ? std::pow(static_cast<double>(m), 1.0 / q_eff) : 0.0;

  RandomStream root(cfg.seed);
  std::vector<TrialData> out(cfg.trials);
  detail::parallel_for(cfg.trials, cfg.threads, [&](std::size_t t) {
    RandomStream stream = root.substream(t);
    Matrix a = sample_gaussian_matrix(stream, m, n);
    TrialData& td = out[t];
    if (exact) {
      if (substitute) {
        const double qs[2] = {cfg.q, q_eff};
        auto results = margin_exact_multi(a, cfg.q_set, cfg.e_set, qs, cfg.margin_opts);
        td.margin = results[0].value;
        td.gradient = margin_gradient(results[1], q_eff, /*exponent_substituted=*/true);
        const double lo = td.margin - results[1].value;
        const double hi = results[1].value - sandwich_factor * td.margin;
        td.sandwich_violation = std::max({0.0, lo, hi});
      } else {
        MarginResult res = margin_exact(a, cfg.q_set, cfg.e_set, cfg.q, cfg.margin_opts);
        td.margin = res.value;
        if (want_gradients && !is_inf_exponent(cfg.q))
          td.gradient = margin_gradient(res, cfg.q);
      }
    } else {
      SphereSolverOptions opts = cfg.sphere;
      opts.seed = stream.next_u64();
      try {
        td.margin = margin_continuous(a, cfg.e_set, cfg.q, opts).value;
      } catch (const numerical_error&) {
        td.failed = true;
      }
    }
  });
  return out;
}

}  // namespace detail

// Monte Carlo concentration experiment: independent margins from per-trial
// sub-streams, plus gradient samples (exact feasible sets only) feeding the
// bound estimates.
inline ConcentrationReport run_concentration(const ExperimentConfig& cfg) {
  auto trials = detail::run_margin_trials(cfg, cfg.collect_gradients);

  ConcentrationReport rep;
  std::vector<MarginGradient> grads;
  for (auto& td : trials) {
    if (td.failed) {
      ++rep.failed_trials;
      continue;
    }
    rep.margins.push_back(td.margin);
    if (td.gradient.entries.rows() > 0) grads.push_back(std::move(td.gradient));
    rep.sandwich_max_violation = std::max(rep.sandwich_max_violation, td.sandwich_violation);
  }
  if (rep.failed_trials * 100 > cfg.trials)
    throw numerical_error("run_concentration: " + std::to_string(rep.failed_trials) + " of " +
                          std::to_string(cfg.trials) + " trials failed (> 1%)");
  if (rep.margins.size() < 2)
    throw numerical_error("run_concentration: fewer than 2 successful trials");

  const std::span<const double> m(rep.margins);
  rep.mean = mean(m);
  rep.variance = sample_variance(m);
  rep.variance_se = variance_standard_error(m);
  // bootstrap stream index sits far above any trial index
  rep.variance_ci = bootstrap_variance_ci(m, hash64(cfg.seed, 0x8000000000000001ull));

  const std::size_t dim_m = cfg.e_set.dim();
  rep.bounds.theorem1_value = theorem1_bound(dim_m, cfg.q);
  const SymmetrySignature sym = cfg.e_set.symmetry();
  if (sym.kind == SymmetryKind::full) {
    const std::size_t sizes[1] = {dim_m};
    rep.bounds.block_value = block_bound(std::span<const std::size_t>(sizes), cfg.q);
  } else if (sym.kind == SymmetryKind::blocks) {
    rep.bounds.block_value = block_bound(sym.block_sizes, cfg.q);
  } else {
    rep.bounds.block_value = std::numeric_limits<double>::quiet_NaN();
  }

  const bool exact = cfg.q_set.enumerable();
  rep.effective_q = exact && is_inf_exponent(cfg.q) && cfg.collect_gradients && dim_m >= 2
                        ? effective_exponent(dim_m, cfg.q)
                        : cfg.q;
  if (grads.size() >= 2) {
    const TalagrandSums ts = talagrand_sums(grads);
    rep.bounds.sum_a2 = ts.sum_a2;
    rep.bounds.sum_b2 = ts.sum_b2;
    rep.bounds.poincare_rhs = ts.sum_b2;
    const L1L2Bound l = l1l2_rhs(ts.sum_a2, ts.sum_b2);
    rep.bounds.l1l2_rhs = l.value;
    rep.bounds.l1l2_degenerate = l.degenerate;
  } else {
    rep.bounds.sum_a2 = rep.bounds.sum_b2 = std::numeric_limits<double>::quiet_NaN();
    rep.bounds.poincare_rhs = std::numeric_limits<double>::quiet_NaN();
    rep.bounds.l1l2_rhs = std::numeric_limits<double>::quiet_NaN();
  }

  rep.var_over_theorem1 = rep.variance / rep.bounds.theorem1_value;
  const double sd = std::sqrt(rep.variance);
  rep.mean_over_sd = sd > 0.0 ? rep.mean / sd : std::numeric_limits<double>::infinity();
  return rep;
}

// run_concentration with the block-symmetry bound; requires E to carry
// blocks (or full, the single-block case) symmetry.
inline ConcentrationReport block_experiment(const ExperimentConfig& cfg) {
  const SymmetrySignature sym = cfg.e_set.symmetry();
  if (sym.kind == SymmetryKind::none)
    throw std::invalid_argument("block_experiment: constraint set has no block symmetry");
  return run_concentration(cfg);
}

struct ThresholdReport {
  std::vector<double> deltas;
  std::vector<double> freq_raw;       // fraction of trials with margin <= delta
  std::vector<double> freq_isotonic;  // nondecreasing least-squares fit
  double delta_05 = std::numeric_limits<double>::quiet_NaN();
  double delta_95 = std::numeric_limits<double>::quiet_NaN();
  double window = std::numeric_limits<double>::quiet_NaN();
  bool out_of_range_low = false;   // transition is left of the grid
  bool out_of_range_high = false;  // transition is right of the grid
  std::vector<double> margins;
};

// Feasibility frequencies P(sample <= delta) over a grid. An empty grid is
// replaced by 41 uniform points over the sampled range. Crossing points
// interpolate the smoothed curve; grids that miss the transition are flagged
// rather than extrapolated.
inline ThresholdReport threshold_from_samples(std::vector<double> samples,
                                              std::vector<double> delta_grid) {
  if (samples.size() < 2)
    throw std::invalid_argument("threshold_from_samples: need >= 2 samples");
  ThresholdReport rep;
  rep.margins = std::move(samples);

  if (delta_grid.empty()) {
    const auto [lo_it, hi_it] = std::minmax_element(rep.margins.begin(), rep.margins.end());
    const double lo = *lo_it, hi = *hi_it;
    const std::size_t points = 41;
    for (std::size_t i = 0; i < points; ++i)
      delta_grid.push_back(lo + (hi - lo) * static_cast<double>(i) / (points - 1));
  }
  if (delta_grid.size() < 3)
    throw std::invalid_argument("threshold: delta grid needs >= 3 points");
  for (std::size_t i = 0; i + 1 < delta_grid.size(); ++i)
    if (!(delta_grid[i] < delta_grid[i + 1]))
      throw std::invalid_argument("threshold: delta grid must be strictly increasing");

  rep.deltas = std::move(delta_grid);
  const double inv_n = 1.0 / static_cast<double>(rep.margins.size());
  for (double d : rep.deltas) {
    std::size_t count = 0;
    for (double m : rep.margins)
      if (m <= d) ++count;
    rep.freq_raw.push_back(static_cast<double>(count) * inv_n);
  }
  rep.freq_isotonic = isotonic_nondecreasing(rep.freq_raw);

  rep.out_of_range_low = rep.freq_isotonic.front() > 0.05;
  rep.out_of_range_high = rep.freq_isotonic.back() < 0.95;
  if (!rep.out_of_range_low)
    rep.delta_05 = crossing_point(rep.deltas, rep.freq_isotonic, 0.05);
  if (!rep.out_of_range_high)
    rep.delta_95 = crossing_point(rep.deltas, rep.freq_isotonic, 0.95);
  if (!rep.out_of_range_low && !rep.out_of_range_high)
    rep.window = rep.delta_95 - rep.delta_05;
  return rep;
}

// Sharp-threshold window estimate: margins from the same engine as
// run_concentration, feasible at delta iff margin <= delta.
inline ThresholdReport run_threshold(const ExperimentConfig& cfg,
                                     std::vector<double> delta_grid) {
  auto trials = detail::run_margin_trials(cfg, /*want_gradients=*/false);
  std::vector<double> margins;
  for (const auto& td : trials)
    if (!td.failed) margins.push_back(td.margin);
  if (margins.size() < 2)
    throw numerical_error("run_threshold: fewer than 2 successful trials");
  return threshold_from_samples(std::move(margins), std::move(delta_grid));
}

struct DiscScalingRow {
  std::size_t n = 0;
  double mean = 0.0;
  double sd = 0.0;
  double mean_over_sd = 0.0;
};

// Square lq discrepancy scaling: per-N concentration runs with
// Q = ScaledHypercube(N), E = {0}^N. Per-N seeds derive from (seed, N).
inline std::vector<ConcentrationReport> disc_scaling_reports(
    std::span<const std::size_t> n_list, double q, std::size_t trials, std::uint64_t seed,
    std::size_t threads = 0, const MarginOptions& margin_opts = {}) {
  std::vector<ConcentrationReport> reports;
  for (std::size_t n : n_list) {
    ExperimentConfig cfg{FeasibleSet::scaled_hypercube(n), ConstraintSet::singleton_zero(n)};
    cfg.q = q;
    cfg.trials = trials;
    cfg.seed = hash64(seed, n);
    cfg.threads = threads;
    cfg.margin_opts = margin_opts;
    reports.push_back(run_concentration(cfg));
  }
  return reports;
}

inline std::vector<DiscScalingRow> disc_scaling(std::span<const std::size_t> n_list, double q,
                                                std::size_t trials, std::uint64_t seed,
                                                std::size_t threads = 0,
                                                const MarginOptions& margin_opts = {}) {
  auto reports = disc_scaling_reports(n_list, q, trials, seed, threads, margin_opts);
  std::vector<DiscScalingRow> rows;
  for (std::size_t i = 0; i < n_list.size(); ++i)
    rows.push_back({n_list[i], reports[i].mean, std::sqrt(reports[i].variance),
                    reports[i].mean_over_sd});
  return rows;
}

struct CapacityEstimate {
  std::uint64_t max_prefix = 0;  // rows satisfiable as a prefix
  std::size_t n = 0;             // ambient dimension
  double value() const { return static_cast<double>(max_prefix) / static_cast<double>(n); }
};

// Prefix capacity: largest m such that some sigma in Q satisfies
// <A_i, sigma> > 0 (strictly) for all i <= m, divided by N.
inline CapacityEstimate perceptron_capacity(std::span<const Vector> rows, const FeasibleSet& q_set,
                                            const MarginOptions& opts = {}) {
  if (rows.empty()) throw std::invalid_argument("perceptron_capacity: empty row list");
  const std::size_t n = q_set.dim();
  for (const auto& r : rows)
    if (r.size() != n) throw std::invalid_argument("perceptron_capacity: row dimension mismatch");
  Enumerator en = enumerate_feasible(q_set, opts.enumeration_cap);
  Vector sigma(n);
  std::uint64_t best = 0;
  for (std::uint64_t k = 0; k < en.size(); ++k) {
    en.member(k, std::span<double>(sigma));
    std::uint64_t prefix = 0;
    for (const auto& r : rows) {
      if (!(dot(r, sigma) > 0.0)) break;
      ++prefix;
    }
    best = std::max(best, prefix);
    if (best == rows.size()) break;
  }
  return {best, n};
}

struct PerceptronCurve {
  std::vector<double> k_grid;
  std::vector<double> margins;  // margin of E = [K, inf)^M at q = inf
  double k_c = 0.0;             // max over sigma of min_i (A sigma)_i
};

namespace detail {

// max over sigma in Q of min_i (A sigma)_i; Gray-code sweep for hypercubes.
inline double max_min_row(const Matrix& a, const FeasibleSet& q_set, const MarginOptions& opts) {
  Enumerator en = enumerate_feasible(q_set, opts.enumeration_cap);
  const std::size_t m = a.rows();
  const std::size_t n = q_set.dim();
  double best = -kInf;
  if (q_set.is_hypercube() && en.size() > opts.slow_path_max && n < 64) {
    const double scale = 1.0 / std::sqrt(static_cast<double>(n));
    std::vector<double> flip(n * m);
    for (std::size_t j = 0; j < n; ++j)
      for (std::size_t i = 0; i < m; ++i) flip[j * m + i] = 2.0 * scale * a(i, j);
    Vector sigma(n, scale), y(m);
    matvec(a, std::span<const double>(sigma), std::span<double>(y));
    std::uint64_t pattern = 0;
    const std::uint64_t total = 1ull << n;
    for (std::uint64_t t = 0;; ++t) {
      double mn = y[0];
      for (std::size_t i = 1; i < m; ++i) mn = std::min(mn, y[i]);
      best = std::max(best, mn);
      if (t + 1 == total) break;
      const unsigned j = static_cast<unsigned>(std::countr_zero(t + 1));
      pattern ^= (1ull << j);
      const double* fc = flip.data() + j * m;
      if ((pattern >> j) & 1ull) {
        for (std::size_t i = 0; i < m; ++i) y[i] -= fc[i];
      } else {
        for (std::size_t i = 0; i < m; ++i) y[i] += fc[i];
      }
      if ((t + 1) % 4096 == 0) {
        for (std::size_t jj = 0; jj < n; ++jj)
          sigma[jj] = ((pattern >> jj) & 1ull) ? -scale : scale;
        matvec(a, std::span<const double>(sigma), std::span<double>(y));
      }
    }
    return best;
  }
  Vector sigma(n), y(m);
  for (std::uint64_t k = 0; k < en.size(); ++k) {
    en.member(k, std::span<double>(sigma));
    matvec(a, std::span<const double>(sigma), std::span<double>(y));
    double mn = y[0];
    for (std::size_t i = 1; i < m; ++i) mn = std::min(mn, y[i]);
    best = std::max(best, mn);
  }
  return best;
}

}  // namespace detail

// Margin of the half-space product E = [K, inf)^M at q = inf over a K grid.
// d_inf(y, E) = max(0, K - min_i y_i), so margin(K) = max(0, K - K_c) with
// K_c = max over sigma of min_i (A sigma)_i.
inline PerceptronCurve perceptron_margin_curve(const Matrix& a, const FeasibleSet& q_set,
                                               std::vector<double> k_grid,
                                               const MarginOptions& opts = {}) {
  PerceptronCurve curve;
  curve.k_c = detail::max_min_row(a, q_set, opts);
  curve.k_grid = std::move(k_grid);
  curve.margins.reserve(curve.k_grid.size());
  for (double k : curve.k_grid) curve.margins.push_back(std::max(0.0, k - curve.k_c));
  return curve;
}

}  // namespace marginlab
