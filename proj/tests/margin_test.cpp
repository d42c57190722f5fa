#include <gtest/gtest.h>

#include <cmath>

#include "marginlab/margin.hpp"
#include "marginlab/rng.hpp"
#include "test_oracles.hpp"

using namespace marginlab;

namespace {

Matrix from_rows(std::initializer_list<std::initializer_list<double>> rows) {
  Matrix m(rows.size(), rows.begin()->size());
  std::size_t i = 0;
  for (const auto& r : rows) {
    std::size_t j = 0;
    for (double v : r) m(i, j++) = v;
    ++i;
  }
  return m;
}

}  // namespace

TEST(MarginExact, IdentityHypercube) {
  // every sigma has unit norm, so the l2 distance to 0 is exactly 1
  Matrix a = Matrix::identity(2);
  auto res = margin_exact(a, FeasibleSet::scaled_hypercube(2), ConstraintSet::singleton_zero(2), 2.0);
  EXPECT_NEAR(res.value, 1.0, 1e-14);
  EXPECT_TRUE(res.exact);
}

TEST(MarginExact, HadamardInfNorm) {
  // images of the four sign vectors are (+-sqrt2, 0) and (0, +-sqrt2)
  Matrix a = from_rows({{1.0, 1.0}, {1.0, -1.0}});
  auto res = margin_exact(a, FeasibleSet::scaled_hypercube(2), ConstraintSet::singleton_zero(2), kInf);
  EXPECT_NEAR(res.value, std::sqrt(2.0), 1e-14);
}

TEST(MarginExact, SingletonReducesToDistance) {
  RandomStream s(3);
  Matrix a = sample_gaussian_matrix(s, 4, 3);
  Vector u{0.2, -0.5, 0.4};
  auto q = FeasibleSet::singleton(u);
  auto e = ConstraintSet::half_line_product(4, 0.1);
  for (double qexp : {2.0, 4.0, kInf}) {
    auto res = margin_exact(a, q, e, qexp);
    EXPECT_DOUBLE_EQ(res.value, lq_distance(e, matvec(a, u), qexp).dist);
    EXPECT_EQ(res.sigma_star, u);
  }
}

TEST(MarginExact, BitForBitAgainstBruteForce) {
  // slow-path contract on small sets: identical minima and identical
  // first-encountered tie winners
  RandomStream s(101);
  for (int rep = 0; rep < 30; ++rep) {
    const std::size_t n = 2 + (s.next_u64() % 7);
    const std::size_t m = 2 + (s.next_u64() % 7);
    Matrix a = sample_gaussian_matrix(s, m, n);
    auto q_set = FeasibleSet::scaled_hypercube(n);
    auto e = (rep % 2) ? ConstraintSet::singleton_zero(m)
                       : ConstraintSet::half_line_product(m, -0.5);
    for (double q : {2.0, 4.0, kInf}) {
      auto exact = margin_exact(a, q_set, e, q);
      auto brute = oracle::brute_force_margin(a, q_set, e, q);
      EXPECT_EQ(exact.value, brute.value);
      EXPECT_EQ(exact.sigma_star, brute.sigma);
    }
  }
}

TEST(MarginExact, FastPathMatchesSlowPath) {
  RandomStream s(202);
  const std::size_t n = 13;  // 8192 candidates: above the default slow cutoff
  Matrix a = sample_gaussian_matrix(s, 9, n);
  auto q_set = FeasibleSet::scaled_hypercube(n);
  auto e = ConstraintSet::singleton_zero(9);
  MarginOptions force_slow;
  force_slow.slow_path_max = 1ull << 30;
  for (double q : {2.0, 9.0, kInf}) {
    auto fast = margin_exact(a, q_set, e, q);
    auto slow = margin_exact(a, q_set, e, q, force_slow);
    EXPECT_NEAR(fast.value, slow.value, 1e-11);
  }
}

TEST(MarginExact, BlockProductConstraints) {
  RandomStream s(303);
  auto e = ConstraintSet::block_product(
      {ConstraintSet::interval_product(3, {Interval{0.2, kInf}}),
       ConstraintSet::interval_product(3, {Interval{-kInf, -0.2}})});
  auto q_set = FeasibleSet::scaled_hypercube(5);
  for (int rep = 0; rep < 10; ++rep) {
    Matrix a = sample_gaussian_matrix(s, 6, 5);
    for (double q : {2.0, 4.0, kInf}) {
      auto exact = margin_exact(a, q_set, e, q);
      auto brute = oracle::brute_force_margin(a, q_set, e, q);
      EXPECT_EQ(exact.value, brute.value);
      EXPECT_EQ(exact.sigma_star, brute.sigma);
    }
  }
}

TEST(MarginGradient, UnitResidualDirectionAtQ2) {
  MarginResult res;
  res.value = 5.0;
  res.sigma_star = {1.0, 0.0};
  res.residual = {3.0, 4.0};
  res.abs_residual = {3.0, 4.0};
  res.q_used = 2.0;
  auto g = margin_gradient(res, 2.0);
  EXPECT_NEAR(g.entries(0, 0), 0.6, 1e-14);
  EXPECT_NEAR(g.entries(1, 0), 0.8, 1e-14);
  EXPECT_DOUBLE_EQ(g.entries(0, 1), 0.0);
  EXPECT_DOUBLE_EQ(g.entries(1, 1), 0.0);
  EXPECT_TRUE(g.well_defined);
}

TEST(MarginGradient, SymmetricCoordinatesQ4) {
  MarginResult res;
  res.sigma_star = {1.0, 0.0};
  res.residual = {1.0, 1.0};
  res.abs_residual = {1.0, 1.0};
  auto g = margin_gradient(res, 4.0);
  const double expected = 1.0 / std::pow(2.0, 0.75);
  EXPECT_NEAR(g.entries(0, 0), expected, 1e-12);
  EXPECT_NEAR(g.entries(1, 0), expected, 1e-12);
}

TEST(MarginGradient, ZeroResidualGivesZeroMatrix) {
  MarginResult res;
  res.sigma_star = {0.5, 0.5};
  res.residual = {0.0, 0.0, 0.0};
  res.abs_residual = {0.0, 0.0, 0.0};
  auto g = margin_gradient(res, 3.0);
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 2; ++j) EXPECT_DOUBLE_EQ(g.entries(i, j), 0.0);
}

TEST(MarginGradient, InfRequiresSubstitution) {
  MarginResult res;
  res.sigma_star = {1.0};
  res.residual = {1.0};
  res.abs_residual = {1.0};
  EXPECT_THROW(margin_gradient(res, kInf), std::invalid_argument);
}

TEST(MarginGradient, EntriesInUnitIntervalAndFrobeniusBound) {
  // sum of squared entries <= 1 whenever ||sigma*||_2 <= 1 and q >= 2
  RandomStream s(404);
  for (int rep = 0; rep < 50; ++rep) {
    Matrix a = sample_gaussian_matrix(s, 6, 5);
    auto res = margin_exact(a, FeasibleSet::scaled_hypercube(5),
                            ConstraintSet::singleton_zero(6), 4.0);
    auto g = margin_gradient(res, 4.0);
    double frob2 = 0.0;
    for (std::size_t i = 0; i < 6; ++i) {
      for (std::size_t j = 0; j < 5; ++j) {
        EXPECT_GE(g.entries(i, j), 0.0);
        EXPECT_LE(g.entries(i, j), 1.0);
        frob2 += g.entries(i, j) * g.entries(i, j);
      }
    }
    EXPECT_LE(frob2, 1.0 + 1e-12);
  }
}

TEST(EffectiveExponent, Values) {
  EXPECT_DOUBLE_EQ(effective_exponent(20, kInf), 9.0);  // ceil(log(20)^2)
  EXPECT_DOUBLE_EQ(effective_exponent(2, kInf), 2.0);   // clamp
  EXPECT_DOUBLE_EQ(effective_exponent(100, 5.0), 5.0);  // passthrough
  EXPECT_THROW(effective_exponent(1, kInf), std::invalid_argument);
}

TEST(FiniteDiff, SingletonClosedForm) {
  // margin(A) = ||A u||_2; gradient = (A u) u^T / ||A u||_2
  RandomStream s(505);
  Matrix a = sample_gaussian_matrix(s, 4, 4);
  Vector u{0.5, -0.5, 0.5, -0.5};
  auto q_set = FeasibleSet::singleton(u);
  auto e = ConstraintSet::singleton_zero(4);
  Matrix fd = finite_diff_gradient(a, q_set, e, 2.0, 1e-6);
  Vector au = matvec(a, u);
  const double nrm = norm2(au);
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = 0; j < 4; ++j)
      EXPECT_NEAR(fd(i, j), au[i] * u[j] / nrm, 1e-6);
}

TEST(FiniteDiff, MatchesGradientFormulaOnUniqueInstances) {
  RandomStream s(606);
  const double h = 1e-5;
  int unique_count = 0;
  for (int rep = 0; rep < 25; ++rep) {
    Matrix a = sample_gaussian_matrix(s, 4, 4);
    auto q_set = FeasibleSet::scaled_hypercube(4);
    auto e = ConstraintSet::singleton_zero(4);
    if (!unique_minimizer(a, q_set, e, 4.0, 10.0 * h)) continue;
    ++unique_count;
    auto res = margin_exact(a, q_set, e, 4.0);
    auto g = margin_gradient(res, 4.0);
    Matrix fd = finite_diff_gradient(a, q_set, e, 4.0, h);
    for (std::size_t i = 0; i < 4; ++i)
      for (std::size_t j = 0; j < 4; ++j)
        EXPECT_NEAR(g.entries(i, j), std::abs(fd(i, j)), std::max(1e-4, 10.0 * h));
  }
  EXPECT_GE(unique_count, 20);  // ~90% of seeds should be unique
}

TEST(MarginSphere, DiagonalCase) {
  Matrix a = from_rows({{2.0, 0.0}, {0.0, 3.0}});
  auto res = margin_sphere_l2(a);
  EXPECT_NEAR(res.value, 2.0, 1e-12);
  EXPECT_NEAR(std::abs(res.sigma_star[0]), 1.0, 1e-10);
  EXPECT_NEAR(res.sigma_star[1], 0.0, 1e-10);
}

TEST(MarginSphere, ZeroMatrix) {
  Matrix a(3, 3);
  auto res = margin_sphere_l2(a);
  EXPECT_DOUBLE_EQ(res.value, 0.0);
}

TEST(MarginSphere, CrossSolverAgreement) {
  RandomStream s(707);
  for (int rep = 0; rep < 5; ++rep) {
    Matrix a = sample_gaussian_matrix(s, 5, 5);
    auto closed = margin_sphere_l2(a);
    SphereSolverOptions opts;
    opts.restarts = 50;
    opts.seed = 900 + rep;
    auto heur = margin_continuous(a, ConstraintSet::singleton_zero(5), 2.0, opts);
    EXPECT_NEAR(heur.value, closed.value, 1e-6);
    EXPECT_FALSE(heur.exact);
    EXPECT_GE(heur.value, closed.value - 1e-9);  // upper-bound semantics
  }
}

TEST(MarginContinuous, CircleGridOracle) {
  RandomStream s(808);
  Matrix a = sample_gaussian_matrix(s, 2, 2);
  auto e = ConstraintSet::singleton_zero(2);
  SphereSolverOptions opts;
  opts.restarts = 20;
  opts.seed = 42;
  auto heur = margin_continuous(a, e, kInf, opts);
  const double grid = oracle::circle_grid_margin(a, e, kInf, 100000);
  EXPECT_NEAR(heur.value, grid, 1e-4);
}

TEST(MarginContinuous, MonotoneInRectangleBound) {
  RandomStream s(909);
  Matrix a = sample_gaussian_matrix(s, 3, 3);
  for (std::size_t i = 0; i < 3; ++i) a(0, i) = 0.0;  // a row of zeros
  SphereSolverOptions opts;
  opts.restarts = 8;
  opts.steps = 500;
  opts.seed = 7;
  auto loose = margin_continuous(a, ConstraintSet::rectangle(Vector{1.0, 1.0, 1.0}), kInf, opts);
  auto tight = margin_continuous(a, ConstraintSet::rectangle(Vector{0.0, 0.0, 0.0}), kInf, opts);
  EXPECT_LE(loose.value, tight.value + 1e-9);
}

TEST(Margin, InfApproximationSandwich) {
  // margin(inf) <= margin(q') <= M^(1/q') margin(inf)
  RandomStream s(1010);
  for (int rep = 0; rep < 20; ++rep) {
    const std::size_t m = 4 + (s.next_u64() % 6);
    Matrix a = sample_gaussian_matrix(s, m, 6);
    auto q_set = FeasibleSet::scaled_hypercube(6);
    auto e = ConstraintSet::singleton_zero(m);
    const double qp = effective_exponent(m, kInf);
    auto m_inf = margin_exact(a, q_set, e, kInf);
    auto m_qp = margin_exact(a, q_set, e, qp);
    EXPECT_LE(m_inf.value, m_qp.value + 1e-10);
    EXPECT_LE(m_qp.value, std::pow(static_cast<double>(m), 1.0 / qp) * m_inf.value + 1e-10);
  }
}

TEST(Margin, ExpansionIdentityInfProduct) {
  // for q = inf and interval products, expanding every interval by delta
  // drops the margin by exactly delta (floored at zero)
  RandomStream s(1111);
  for (int rep = 0; rep < 20; ++rep) {
    Matrix a = sample_gaussian_matrix(s, 5, 5);
    auto q_set = FeasibleSet::scaled_hypercube(5);
    const double k = 0.3;
    auto e = ConstraintSet::interval_product(5, {Interval{k, kInf}});
    const double delta = 0.25 * (1 + (rep % 3));
    auto e_exp = ConstraintSet::interval_product(5, {Interval{k - delta, kInf}});
    const double base = margin_exact(a, q_set, e, kInf).value;
    const double expanded = margin_exact(a, q_set, e_exp, kInf).value;
    EXPECT_NEAR(expanded, std::max(0.0, base - delta), 1e-12);
    EXPECT_LE(expanded, base + 1e-15);
  }
}

TEST(Margin, ExpansionFeasibilityViaMembership) {
  // margin(E_delta) = 0 iff some enumerated image lies in the delta-expansion
  RandomStream s(1212);
  for (int rep = 0; rep < 10; ++rep) {
    Matrix a = sample_gaussian_matrix(s, 4, 4);
    auto q_set = FeasibleSet::scaled_hypercube(4);
    auto e = ConstraintSet::singleton_zero(4);
    for (double q : {2.0, kInf}) {
      const double margin = margin_exact(a, q_set, e, q).value;
      for (double delta : {0.5 * margin, margin, 2.0 * margin}) {
        bool feasible = false;
        for (const auto& sigma : enumerate_all(q_set))
          if (in_expansion(e, matvec(a, sigma), delta, q)) feasible = true;
        EXPECT_EQ(feasible, margin <= delta);
      }
    }
  }
}
