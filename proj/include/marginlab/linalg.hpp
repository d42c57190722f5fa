#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

#include "marginlab/errors.hpp"

namespace marginlab {

using Vector = std::vector<double>;

// Dense row-major matrix of doubles. Small and plain on purpose: desk-scale
// problems, no expression templates.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), a_(rows * cols, fill) {}

  static Matrix identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }

  double& operator()(std::size_t i, std::size_t j) { return a_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return a_[i * cols_ + j]; }

  double* data() { return a_.data(); }
  const double* data() const { return a_.data(); }

  std::span<double> row(std::size_t i) { return {a_.data() + i * cols_, cols_}; }
  std::span<const double> row(std::size_t i) const { return {a_.data() + i * cols_, cols_}; }

  bool same_shape(const Matrix& o) const { return rows_ == o.rows_ && cols_ == o.cols_; }

  bool operator==(const Matrix& o) const = default;

 private:
  std::size_t rows_ = 0, cols_ = 0;
  std::vector<double> a_;
};

// y = A*x, plain ascending-index dot products. Enumeration-based solvers and
// their brute-force oracles share this exact summation order.
inline void matvec(const Matrix& a, std::span<const double> x, std::span<double> y) {
  if (x.size() != a.cols() || y.size() != a.rows())
    throw std::invalid_argument("matvec: dimension mismatch");
  for (std::size_t i = 0; i < a.rows(); ++i) {
    const double* row = a.data() + i * a.cols();
    double s = 0.0;
    for (std::size_t j = 0; j < a.cols(); ++j) s += row[j] * x[j];
    y[i] = s;
  }
}

inline Vector matvec(const Matrix& a, const Vector& x) {
  Vector y(a.rows());
  matvec(a, std::span<const double>(x), std::span<double>(y));
  return y;
}

inline double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double norm2(std::span<const double> v) { return std::sqrt(dot(v, v)); }

inline double frobenius_norm(const Matrix& m) {
  double s = 0.0;
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j) s += m(i, j) * m(i, j);
  return std::sqrt(s);
}

struct EigenDecomposition {
  Vector eigenvalues;  // sorted descending
  Matrix eigenvectors; // column k pairs with eigenvalues[k]
};

namespace detail {

// One cyclic Jacobi pass over the strict upper triangle of the packed
// row-major d*d buffer `a`. `v` (may be null) accumulates rotations.
inline bool jacobi_sweep(double* a, double* v, std::size_t d, double off_tol) {
  bool rotated = false;
  for (std::size_t p = 0; p + 1 < d; ++p) {
    for (std::size_t q = p + 1; q < d; ++q) {
      const double apq = a[p * d + q];
      if (std::abs(apq) <= off_tol) continue;
      rotated = true;
      const double app = a[p * d + p];
      const double aqq = a[q * d + q];
      const double theta = (aqq - app) / (2.0 * apq);
      const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                       (std::abs(theta) + std::sqrt(theta * theta + 1.0));
      const double c = 1.0 / std::sqrt(t * t + 1.0);
      const double s = t * c;
      const double tau = s / (1.0 + c);
      a[p * d + p] = app - t * apq;
      a[q * d + q] = aqq + t * apq;
      a[p * d + q] = 0.0;
      a[q * d + p] = 0.0;
      for (std::size_t r = 0; r < d; ++r) {
        if (r != p && r != q) {
          const double arp = a[r * d + p];
          const double arq = a[r * d + q];
          a[r * d + p] = a[p * d + r] = arp - s * (arq + tau * arp);
          a[r * d + q] = a[q * d + r] = arq + s * (arp - tau * arq);
        }
        if (v) {
          const double vrp = v[r * d + p];
          const double vrq = v[r * d + q];
          v[r * d + p] = vrp - s * (vrq + tau * vrp);
          v[r * d + q] = vrq + s * (vrp - tau * vrq);
        }
      }
    }
  }
  return rotated;
}

inline double offdiag_frobenius(const double* a, std::size_t d) {
  double s = 0.0;
  for (std::size_t p = 0; p + 1 < d; ++p)
    for (std::size_t q = p + 1; q < d; ++q) s += a[p * d + q] * a[p * d + q];
  return std::sqrt(2.0 * s);
}

// In-place cyclic Jacobi on the packed buffer; `v` may be null when only
// eigenvalues are wanted. Iterates until off-diagonal Frobenius mass drops
// below rel_tol * ||S||_F.
inline void jacobi_eigen_inplace(double* a, double* v, std::size_t d, double rel_tol) {
  double frob = 0.0;
  for (std::size_t i = 0; i < d * d; ++i) frob += a[i] * a[i];
  frob = std::sqrt(frob);
  const double stop = rel_tol * frob;
  if (v) {
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t j = 0; j < d; ++j) v[i * d + j] = (i == j) ? 1.0 : 0.0;
  }
  if (frob == 0.0) return;
  constexpr int kMaxSweeps = 64;
  for (int sweep = 0; sweep < kMaxSweeps; ++sweep) {
    if (offdiag_frobenius(a, d) <= stop) return;
    // zero rotations with a positive threshold in early sweeps speeds
    // convergence on strongly diagonal-dominant input
    if (!jacobi_sweep(a, v, d, 0.0)) return;
  }
  if (offdiag_frobenius(a, d) > stop)
    throw numerical_error("jacobi_eigen: did not converge in 64 sweeps");
}

}  // namespace detail

// Eigenvalues (descending) of a symmetric matrix held in a plain buffer,
// destroying it. Scratch-free fast path for enumeration loops.
inline double max_abs_eigenvalue_inplace(double* a, std::size_t d, double rel_tol = 1e-12) {
  detail::jacobi_eigen_inplace(a, nullptr, d, rel_tol);
  double m = 0.0;
  for (std::size_t i = 0; i < d; ++i) m = std::max(m, std::abs(a[i * d + i]));
  return m;
}

inline EigenDecomposition jacobi_eigen(const Matrix& s, double rel_tol = 1e-12) {
  if (s.rows() != s.cols()) throw std::invalid_argument("jacobi_eigen: matrix not square");
  const std::size_t d = s.rows();
  Matrix a = s;
  Matrix v(d, d);
  detail::jacobi_eigen_inplace(a.data(), v.data(), d, rel_tol);
  std::vector<std::size_t> order(d);
  for (std::size_t i = 0; i < d; ++i) order[i] = i;
  std::sort(order.begin(), order.end(),
            [&](std::size_t x, std::size_t y) { return a(x, x) > a(y, y); });
  EigenDecomposition out;
  out.eigenvalues.resize(d);
  out.eigenvectors = Matrix(d, d);
  for (std::size_t k = 0; k < d; ++k) {
    out.eigenvalues[k] = a(order[k], order[k]);
    for (std::size_t r = 0; r < d; ++r) out.eigenvectors(r, k) = v(r, order[k]);
  }
  return out;
}

}  // namespace marginlab
