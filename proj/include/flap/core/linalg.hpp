#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

#include "flap/core/rng.hpp"

namespace flap::core {

// Small dense row-major double matrix. Only what the scene transforms need;
// anything heavier belongs in a real linear algebra library.
struct MatD {
  int rows = 0;
  int cols = 0;
  std::vector<double> a;

  MatD() = default;
  MatD(int r, int c) : rows(r), cols(c), a(static_cast<std::size_t>(r) * c, 0.0) {}

  double& at(int r, int c) { return a[static_cast<std::size_t>(r) * cols + c]; }
  double at(int r, int c) const { return a[static_cast<std::size_t>(r) * cols + c]; }

  static MatD identity(int n) {
    MatD m(n, n);
    for (int i = 0; i < n; ++i) m.at(i, i) = 1.0;
    return m;
  }
};

inline std::vector<double> matvec(const MatD& m, std::span<const double> x) {
  if (static_cast<int>(x.size()) != m.cols) throw std::invalid_argument("matvec: dimension mismatch");
  std::vector<double> y(static_cast<std::size_t>(m.rows), 0.0);
  for (int r = 0; r < m.rows; ++r) {
    double acc = 0.0;
    for (int c = 0; c < m.cols; ++c) acc += m.at(r, c) * x[static_cast<std::size_t>(c)];
    y[static_cast<std::size_t>(r)] = acc;
  }
  return y;
}

// Gauss-Jordan with partial pivoting.
inline MatD invert(const MatD& m) {
  if (m.rows != m.cols) throw std::invalid_argument("invert: square matrix required");
  const int n = m.rows;
  MatD a = m;
  MatD inv = MatD::identity(n);
  for (int col = 0; col < n; ++col) {
    int pivot = col;
    double best = std::fabs(a.at(col, col));
    for (int r = col + 1; r < n; ++r) {
      const double v = std::fabs(a.at(r, col));
      if (v > best) {
        best = v;
        pivot = r;
      }
    }
    if (best < 1e-12) throw std::runtime_error("invert: singular matrix");
    if (pivot != col) {
      for (int c = 0; c < n; ++c) {
        std::swap(a.at(pivot, c), a.at(col, c));
        std::swap(inv.at(pivot, c), inv.at(col, c));
      }
    }
    const double d = a.at(col, col);
    for (int c = 0; c < n; ++c) {
      a.at(col, c) /= d;
      inv.at(col, c) /= d;
    }
    for (int r = 0; r < n; ++r) {
      if (r == col) continue;
      const double f = a.at(r, col);
      if (f == 0.0) continue;
      for (int c = 0; c < n; ++c) {
        a.at(r, c) -= f * a.at(col, c);
        inv.at(r, c) -= f * inv.at(col, c);
      }
    }
  }
  return inv;
}

// Random orthonormal matrix via Gram-Schmidt on Gaussian columns, with rows
// rescaled by factors in [scale_lo, scale_hi]. The condition number of the
// result equals max_scale / min_scale, so bounds on the scales bound the
// conditioning exactly.
inline MatD random_scaled_orthogonal(int n, Rng& rng, double scale_lo, double scale_hi) {
  MatD q(n, n);
  for (int col = 0; col < n; ++col) {
    std::vector<double> v(static_cast<std::size_t>(n));
    while (true) {
      for (int r = 0; r < n; ++r) v[static_cast<std::size_t>(r)] = rng.normal();
      for (int prev = 0; prev < col; ++prev) {
        double dot = 0.0;
        for (int r = 0; r < n; ++r) dot += v[static_cast<std::size_t>(r)] * q.at(r, prev);
        for (int r = 0; r < n; ++r) v[static_cast<std::size_t>(r)] -= dot * q.at(r, prev);
      }
      double norm = 0.0;
      for (double x : v) norm += x * x;
      norm = std::sqrt(norm);
      if (norm > 1e-6) {
        for (int r = 0; r < n; ++r) q.at(r, col) = v[static_cast<std::size_t>(r)] / norm;
        break;
      }
    }
  }
  for (int r = 0; r < n; ++r) {
    const double s = rng.uniform(scale_lo, scale_hi);
    for (int c = 0; c < n; ++c) q.at(r, c) *= s;
  }
  return q;
}

}  // namespace flap::core
