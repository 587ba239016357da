#pragma once

#include <array>
#include <cmath>
#include <cstddef>

#include "zipmix/errors.hpp"

namespace zipmix {

// Dense fixed-size square matrix, just big enough for the 3x3 and 4x4
// information matrices and their 2x2 blocks.
template <std::size_t N>
struct Mat {
  std::array<double, N * N> a{};

  double& operator()(std::size_t i, std::size_t j) { return a[i * N + j]; }
  double operator()(std::size_t i, std::size_t j) const { return a[i * N + j]; }

  Mat& operator+=(const Mat& o) {
    for (std::size_t k = 0; k < N * N; ++k) a[k] += o.a[k];
    return *this;
  }
  Mat& operator-=(const Mat& o) {
    for (std::size_t k = 0; k < N * N; ++k) a[k] -= o.a[k];
    return *this;
  }

  // w * v v' added in place.
  void add_outer(const std::array<double, N>& v, double w) {
    for (std::size_t i = 0; i < N; ++i)
      for (std::size_t j = 0; j < N; ++j) a[i * N + j] += w * v[i] * v[j];
  }

  double max_abs() const {
    double m = 0.0;
    for (double x : a) m = std::max(m, std::abs(x));
    return m;
  }
};

using Mat2 = Mat<2>;
using Mat3 = Mat<3>;
using Mat4 = Mat<4>;

// Gauss-Jordan inverse with partial pivoting; throws SingularInfo.
template <std::size_t N>
Mat<N> inverse(Mat<N> m) {
  Mat<N> inv;
  for (std::size_t i = 0; i < N; ++i) inv(i, i) = 1.0;
  for (std::size_t col = 0; col < N; ++col) {
    std::size_t piv = col;
    for (std::size_t r = col + 1; r < N; ++r)
      if (std::abs(m(r, col)) > std::abs(m(piv, col))) piv = r;
    if (m(piv, col) == 0.0 || !std::isfinite(m(piv, col)))
      throw SingularInfo("matrix is singular");
    if (piv != col) {
      for (std::size_t c = 0; c < N; ++c) {
        std::swap(m(piv, c), m(col, c));
        std::swap(inv(piv, c), inv(col, c));
      }
    }
    const double d = m(col, col);
    for (std::size_t c = 0; c < N; ++c) {
      m(col, c) /= d;
      inv(col, c) /= d;
    }
    for (std::size_t r = 0; r < N; ++r) {
      if (r == col) continue;
      const double f = m(r, col);
      if (f == 0.0) continue;
      for (std::size_t c = 0; c < N; ++c) {
        m(r, c) -= f * m(col, c);
        inv(r, c) -= f * inv(col, c);
      }
    }
  }
  return inv;
}

// v' M v.
template <std::size_t N>
double quad_form(const Mat<N>& m, const std::array<double, N>& v) {
  double s = 0.0;
  for (std::size_t i = 0; i < N; ++i)
    for (std::size_t j = 0; j < N; ++j) s += v[i] * m(i, j) * v[j];
  return s;
}

// Schur complement of the leading P x P block: lower (N-P) x (N-P) block
// minus I21 * I11^{-1} * I12.
template <std::size_t P, std::size_t N>
Mat<N - P> schur_complement(const Mat<N>& m) {
  Mat<P> i11;
  for (std::size_t i = 0; i < P; ++i)
    for (std::size_t j = 0; j < P; ++j) i11(i, j) = m(i, j);
  const Mat<P> i11inv = inverse(i11);
  Mat<N - P> out;
  for (std::size_t i = 0; i < N - P; ++i)
    for (std::size_t j = 0; j < N - P; ++j) {
      double corr = 0.0;
      for (std::size_t k = 0; k < P; ++k)
        for (std::size_t l = 0; l < P; ++l)
          corr += m(P + i, k) * i11inv(k, l) * m(l, P + j);
      out(i, j) = m(P + i, P + j) - corr;
    }
  return out;
}

}  // namespace zipmix
