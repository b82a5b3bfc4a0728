#pragma once

#include <array>
#include <cmath>

namespace gradplast {

/// Dense 3x3 matrix value type, row-major, used for per-node tensor algebra.
struct Mat3 {
  std::array<double, 9> a{};

  double& operator()(int r, int c) { return a[3 * r + c]; }
  double operator()(int r, int c) const { return a[3 * r + c]; }

  static Mat3 zero() { return Mat3{}; }
  static Mat3 identity() {
    Mat3 m;
    m(0, 0) = m(1, 1) = m(2, 2) = 1.0;
    return m;
  }

  Mat3& operator+=(const Mat3& o) {
    for (int i = 0; i < 9; ++i) a[i] += o.a[i];
    return *this;
  }
  Mat3& operator-=(const Mat3& o) {
    for (int i = 0; i < 9; ++i) a[i] -= o.a[i];
    return *this;
  }
  Mat3& operator*=(double s) {
    for (int i = 0; i < 9; ++i) a[i] *= s;
    return *this;
  }
  friend Mat3 operator+(Mat3 x, const Mat3& y) { return x += y; }
  friend Mat3 operator-(Mat3 x, const Mat3& y) { return x -= y; }
  friend Mat3 operator*(double s, Mat3 x) { return x *= s; }
};

inline double trace(const Mat3& m) { return m(0, 0) + m(1, 1) + m(2, 2); }

inline Mat3 transpose(const Mat3& m) {
  Mat3 t;
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) t(r, c) = m(c, r);
  return t;
}

inline Mat3 sym(const Mat3& m) {
  Mat3 s;
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) s(r, c) = 0.5 * (m(r, c) + m(c, r));
  return s;
}

inline Mat3 skew(const Mat3& m) {
  Mat3 s;
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) s(r, c) = 0.5 * (m(r, c) - m(c, r));
  return s;
}

inline Mat3 dev(const Mat3& m) {
  Mat3 d = m;
  const double t = trace(m) / 3.0;
  d(0, 0) -= t;
  d(1, 1) -= t;
  d(2, 2) -= t;
  return d;
}

/// Frobenius pairing a : b.
inline double ddot(const Mat3& x, const Mat3& y) {
  double s = 0.0;
  for (int i = 0; i < 9; ++i) s += x.a[i] * y.a[i];
  return s;
}

inline double norm(const Mat3& m) { return std::sqrt(ddot(m, m)); }

} // namespace gradplast
