#include <gtest/gtest.h>

#include <cmath>

#include "marginlab/balancing.hpp"
#include "test_oracles.hpp"

using namespace marginlab;

namespace {

Matrix diag3(double a, double b, double c) {
  Matrix m(3, 3);
  m(0, 0) = a;
  m(1, 1) = b;
  m(2, 2) = c;
  return m;
}

}  // namespace

TEST(SymmetricEigen, DiagonalSorted) {
  auto ed = symmetric_eigen(diag3(1.0, -5.0, 3.0));
  EXPECT_DOUBLE_EQ(ed.eigenvalues[0], 3.0);
  EXPECT_DOUBLE_EQ(ed.eigenvalues[1], 1.0);
  EXPECT_DOUBLE_EQ(ed.eigenvalues[2], -5.0);
  EXPECT_DOUBLE_EQ(operator_norm(diag3(1.0, -5.0, 3.0)), 5.0);
}

TEST(SymmetricEigen, TwoByTwoExchange) {
  Matrix s(2, 2);
  s(0, 1) = 1.0;
  s(1, 0) = 1.0;
  auto ed = symmetric_eigen(s);
  EXPECT_NEAR(ed.eigenvalues[0], 1.0, 1e-14);
  EXPECT_NEAR(ed.eigenvalues[1], -1.0, 1e-14);
  const double inv = 1.0 / std::sqrt(2.0);
  EXPECT_NEAR(std::abs(ed.eigenvectors(0, 0)), inv, 1e-12);
  EXPECT_NEAR(std::abs(ed.eigenvectors(1, 0)), inv, 1e-12);
}

TEST(SymmetricEigen, ReconstructionAndOrthonormality) {
  RandomStream stream(71);
  for (int rep = 0; rep < 10; ++rep) {
    Matrix s = sample_goe(stream, 12);
    auto ed = symmetric_eigen(s);
    const double frob = frobenius_norm(s);
    // V Lambda V^T == S
    Matrix recon(12, 12);
    for (std::size_t i = 0; i < 12; ++i)
      for (std::size_t j = 0; j < 12; ++j) {
        double acc = 0.0;
        for (std::size_t k = 0; k < 12; ++k)
          acc += ed.eigenvectors(i, k) * ed.eigenvalues[k] * ed.eigenvectors(j, k);
        recon(i, j) = acc;
      }
    double err = 0.0;
    for (std::size_t i = 0; i < 12; ++i)
      for (std::size_t j = 0; j < 12; ++j) err += (recon(i, j) - s(i, j)) * (recon(i, j) - s(i, j));
    EXPECT_LE(std::sqrt(err), 1e-9 * frob);
    for (std::size_t a = 0; a < 12; ++a)
      for (std::size_t b = 0; b < 12; ++b) {
        double d = 0.0;
        for (std::size_t i = 0; i < 12; ++i) d += ed.eigenvectors(i, a) * ed.eigenvectors(i, b);
        EXPECT_NEAR(d, a == b ? 1.0 : 0.0, 1e-9);
      }
  }
}

TEST(SymmetricEigen, RejectsAsymmetric) {
  Matrix s(2, 2);
  s(0, 1) = 1.0;
  s(1, 0) = 1.0 + 1e-6;
  EXPECT_THROW(symmetric_eigen(s), std::invalid_argument);
  EXPECT_THROW(operator_norm(s), std::invalid_argument);
}

TEST(OperatorNorm, ZeroAndSemicircleBand) {
  EXPECT_DOUBLE_EQ(operator_norm(Matrix(4, 4)), 0.0);
  // ||GOE_d|| concentrates near 2 sqrt(d); +-35% band at d = 50
  RandomStream stream(73);
  const double edge = 2.0 * std::sqrt(50.0);
  Matrix g = sample_goe(stream, 50);
  const double nrm = operator_norm(g);
  EXPECT_GE(nrm, edge * 0.65);
  EXPECT_LE(nrm, edge * 1.35);
}

TEST(BalanceExact, SingleMatrixSignIrrelevant) {
  RandomStream stream(79);
  auto inst = sample_balancing_instance(stream, 4, 1);
  auto res = balance_exact(inst);
  EXPECT_NEAR(res.disc, operator_norm(inst.matrices[0]) / 2.0, 1e-12);
  EXPECT_TRUE(res.exact);
}

TEST(BalanceExact, PerfectCancellation) {
  BalancingInstance inst;
  inst.d = 2;
  inst.n = 2;
  inst.matrices = {Matrix::identity(2), Matrix::identity(2)};
  auto res = balance_exact(inst);
  EXPECT_NEAR(res.disc, 0.0, 1e-12);
  EXPECT_DOUBLE_EQ(res.sigma_star[0] * res.sigma_star[1], -0.5);  // opposite signs, scaled
}

TEST(BalanceExact, BruteForceOracle) {
  RandomStream stream(83);
  for (int rep = 0; rep < 3; ++rep) {
    auto inst = sample_balancing_instance(stream, 4, 8);
    auto res = balance_exact(inst);
    EXPECT_NEAR(res.disc, oracle::brute_force_disc(inst), 1e-12);
  }
}

TEST(BalanceExact, ResultInvariants) {
  RandomStream stream(89);
  auto inst = sample_balancing_instance(stream, 5, 6);
  auto res = balance_exact(inst);
  EXPECT_NEAR(norm2(res.top_eigenvector), 1.0, 1e-10);
  EXPECT_NEAR(res.disc, std::abs(res.top_eigenvalue) / std::sqrt(5.0), 1e-9);
  // flipping any single sign cannot beat the optimum
  const double scale = 1.0 / std::sqrt(6.0);
  for (std::size_t flip = 0; flip < 6; ++flip) {
    Matrix s(5, 5);
    for (std::size_t i = 0; i < 6; ++i) {
      const double c = res.sigma_star[i] * (i == flip ? -1.0 : 1.0);
      for (std::size_t r = 0; r < 5; ++r)
        for (std::size_t cc = 0; cc < 5; ++cc) s(r, cc) += c * inst.matrices[i](r, cc);
    }
    EXPECT_GE(operator_norm(s) / std::sqrt(5.0), res.disc - 1e-9);
    (void)scale;
  }
}

TEST(BalanceExact, EnumerationCap) {
  BalancingInstance inst;
  inst.d = 1;
  inst.n = 25;
  inst.matrices.assign(25, Matrix(1, 1));
  EXPECT_THROW(balance_exact(inst), resource_limit_error);
}

TEST(BalanceExact, OrthogonalConjugationInvariance) {
  RandomStream stream(97);
  auto inst = sample_balancing_instance(stream, 4, 6);
  // orthogonal matrix: eigenvectors of a random symmetric matrix
  Matrix rot = symmetric_eigen(sample_goe(stream, 4)).eigenvectors;
  BalancingInstance conj;
  conj.d = 4;
  conj.n = 6;
  for (const auto& a : inst.matrices) {
    Matrix b(4, 4);
    for (std::size_t i = 0; i < 4; ++i)
      for (std::size_t j = 0; j < 4; ++j) {
        double acc = 0.0;
        for (std::size_t k = 0; k < 4; ++k)
          for (std::size_t l = 0; l < 4; ++l) acc += rot(k, i) * a(k, l) * rot(l, j);
        b(i, j) = acc;
      }
    // exact symmetrization kills rounding skew
    for (std::size_t i = 0; i < 4; ++i)
      for (std::size_t j = i + 1; j < 4; ++j) {
        const double v = 0.5 * (b(i, j) + b(j, i));
        b(i, j) = v;
        b(j, i) = v;
      }
    conj.matrices.push_back(std::move(b));
  }
  EXPECT_NEAR(balance_exact(inst).disc, balance_exact(conj).disc, 1e-9);
}

TEST(BalanceLocalSearch, UpperBoundAndFrequentExactness) {
  RandomStream stream(101);
  int exact_hits = 0;
  const int runs = 40;
  for (int rep = 0; rep < runs; ++rep) {
    auto inst = sample_balancing_instance(stream, 4, 10);
    auto exact = balance_exact(inst);
    auto local = balance_local_search(inst, 20, 100, 1000 + rep);
    EXPECT_GE(local.disc, exact.disc - 1e-12);  // never better than exact
    EXPECT_FALSE(local.exact);
    if (local.disc <= exact.disc + 1e-9) ++exact_hits;
  }
  EXPECT_GE(exact_hits, runs * 8 / 10);  // >= 80% hit rate
}

TEST(BalanceLocalSearch, BestNonIncreasingInRestarts) {
  RandomStream stream(103);
  auto inst = sample_balancing_instance(stream, 4, 12);
  double prev = kInf;
  for (std::size_t r : {1, 4, 16}) {
    const double v = balance_local_search(inst, r, 100, 7).disc;
    EXPECT_LE(v, prev + 1e-15);
    prev = v;
  }
}

TEST(EigGradient, DiagonalCase) {
  Matrix s(2, 2);
  s(0, 0) = 3.0;
  s(1, 1) = 1.0;
  Matrix g = eig_gradient(s);
  EXPECT_DOUBLE_EQ(g(0, 0), 1.0);
  EXPECT_DOUBLE_EQ(g(0, 1), 0.0);
  EXPECT_DOUBLE_EQ(g(1, 0), 0.0);
  EXPECT_DOUBLE_EQ(g(1, 1), 0.0);
}

TEST(EigGradient, TraceOneAndRankOne) {
  RandomStream stream(107);
  for (int rep = 0; rep < 10; ++rep) {
    Matrix s = sample_goe(stream, 5);
    Matrix g = eig_gradient(s);
    double trace = 0.0, frob2 = 0.0;
    for (std::size_t i = 0; i < 5; ++i) {
      trace += g(i, i);
      for (std::size_t j = 0; j < 5; ++j) frob2 += g(i, j) * g(i, j);
    }
    EXPECT_NEAR(trace, 1.0, 1e-10);
    EXPECT_NEAR(frob2, 1.0, 1e-10);  // ||u u^T||_F = ||u||^2 = 1
  }
}

TEST(EigGradient, DegenerateTopRejected) {
  EXPECT_THROW(eig_gradient(Matrix::identity(3)), degeneracy_error);
}

TEST(EigGradient, FiniteDifferenceOracle) {
  RandomStream stream(109);
  int checked = 0;
  while (checked < 10) {
    Matrix s = sample_goe(stream, 5);
    auto ed = symmetric_eigen(s);
    if (ed.eigenvalues[0] - ed.eigenvalues[1] < 0.1) continue;  // want a spectral gap
    ++checked;
    Matrix g = eig_gradient(s);
    Matrix fd = oracle::fd_lambda_max(s, 1e-5);
    for (std::size_t i = 0; i < 5; ++i)
      for (std::size_t j = 0; j < 5; ++j)
        EXPECT_NEAR(g(i, j), fd(i, j), 1e-6 * std::max(1.0, std::abs(g(i, j))));
  }
}

TEST(BalancingExperiment, SmallRunStatistics) {
  auto rep = balancing_variance_experiment(6, 8, 60, 113);
  EXPECT_EQ(rep.discs.size(), 60u);
  EXPECT_GT(rep.mean, 0.0);
  EXPECT_LE(rep.variance, 1.0 / 6.0 + 3.0 * rep.variance_se);
  EXPECT_LE(rep.variance_ci.lo, rep.variance);
  EXPECT_GE(rep.variance_ci.hi, rep.variance);
  // identical rerun, and thread-count independence
  auto rep2 = balancing_variance_experiment(6, 8, 60, 113, 1);
  for (std::size_t i = 0; i < 60; ++i) EXPECT_EQ(rep.discs[i], rep2.discs[i]);
}

TEST(BalancingExperiment, GlobalSignFlipInvariance) {
  RandomStream stream(127);
  auto inst = sample_balancing_instance(stream, 4, 6);
  auto res = balance_exact(inst);
  BalancingInstance flipped = inst;
  for (auto& m : flipped.matrices)
    for (std::size_t i = 0; i < 4; ++i)
      for (std::size_t j = 0; j < 4; ++j) m(i, j) = -m(i, j);
  EXPECT_NEAR(balance_exact(flipped).disc, res.disc, 1e-12);
}
