#pragma once

// Small dense helpers for the d x d volatility blocks (d is tiny, typically 1).

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "bsdelab/errors.hpp"

namespace bsdelab::linalg {

inline double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

/// y = A x for row-major A (n x n).
inline void matvec(std::span<const double> A, std::span<const double> x,
                   std::span<double> y) {
  const std::size_t n = x.size();
  for (std::size_t i = 0; i < n; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < n; ++j) s += A[i * n + j] * x[j];
    y[i] = s;
  }
}

/// y = A^T x for row-major A (n x n).
inline void matvec_t(std::span<const double> A, std::span<const double> x,
                     std::span<double> y) {
  const std::size_t n = x.size();
  for (std::size_t i = 0; i < n; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < n; ++j) s += A[j * n + i] * x[j];
    y[i] = s;
  }
}

/// Solves A x = b in place by Gaussian elimination with partial pivoting.
/// Returns false when the pivot degenerates (singular matrix).
inline bool solve(std::vector<double> A, std::vector<double> b,
                  std::span<double> x) {
  const std::size_t n = b.size();
  std::vector<std::size_t> piv(n);
  for (std::size_t i = 0; i < n; ++i) piv[i] = i;
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t best = col;
    double mag = std::fabs(A[piv[col] * n + col]);
    for (std::size_t r = col + 1; r < n; ++r) {
      const double m = std::fabs(A[piv[r] * n + col]);
      if (m > mag) { mag = m; best = r; }
    }
    if (!(mag > 0.0) || !std::isfinite(mag)) return false;
    std::swap(piv[col], piv[best]);
    const double p = A[piv[col] * n + col];
    for (std::size_t r = col + 1; r < n; ++r) {
      const double f = A[piv[r] * n + col] / p;
      if (f == 0.0) continue;
      A[piv[r] * n + col] = 0.0;
      for (std::size_t c = col + 1; c < n; ++c) A[piv[r] * n + c] -= f * A[piv[col] * n + c];
      b[piv[r]] -= f * b[piv[col]];
    }
  }
  for (std::size_t ri = n; ri-- > 0;) {
    double s = b[piv[ri]];
    for (std::size_t c = ri + 1; c < n; ++c) s -= A[piv[ri] * n + c] * x[c];
    x[ri] = s / A[piv[ri] * n + ri];
    if (!std::isfinite(x[ri])) return false;
  }
  return true;
}

/// True when A is invertible with a sane pivot scale.
inline bool invertible(const std::vector<double>& A, std::size_t n) {
  std::vector<double> b(n, 0.0), x(n, 0.0);
  if (n == 0) return true;
  b[0] = 1.0;
  return solve(A, b, x);
}

}  // namespace bsdelab::linalg
