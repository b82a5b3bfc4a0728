#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

#include "gradplast/grid.hpp"
#include "gradplast/matrix3.hpp"

namespace gradplast {

/// Node-collocated field with N doubles per node, flat node-major storage.
template <int N>
class NodeField {
public:
  NodeField() = default;
  explicit NodeField(std::size_t nodes) : nodes_(nodes), v_(nodes * N, 0.0) {}
  explicit NodeField(const Grid& g) : NodeField(g.node_count()) {}

  std::size_t nodes() const { return nodes_; }
  static constexpr int components() { return N; }
  std::size_t size() const { return v_.size(); }

  double& operator()(std::size_t node, int comp) { return v_[N * node + comp]; }
  double operator()(std::size_t node, int comp) const { return v_[N * node + comp]; }
  double& operator[](std::size_t flat) { return v_[flat]; }
  double operator[](std::size_t flat) const { return v_[flat]; }

  double* data() { return v_.data(); }
  const double* data() const { return v_.data(); }

  void fill(double s) { for (double& x : v_) x = s; }

  NodeField& operator+=(const NodeField& o) {
    check_same(o);
    for (std::size_t i = 0; i < v_.size(); ++i) v_[i] += o.v_[i];
    return *this;
  }
  NodeField& operator-=(const NodeField& o) {
    check_same(o);
    for (std::size_t i = 0; i < v_.size(); ++i) v_[i] -= o.v_[i];
    return *this;
  }
  NodeField& operator*=(double s) {
    for (double& x : v_) x *= s;
    return *this;
  }
  friend NodeField operator+(NodeField x, const NodeField& y) { return x += y; }
  friend NodeField operator-(NodeField x, const NodeField& y) { return x -= y; }
  friend NodeField operator*(double s, NodeField x) { return x *= s; }

  void check_same(const NodeField& o) const {
    if (nodes_ != o.nodes_) throw std::invalid_argument("NodeField: shape mismatch");
  }

private:
  std::size_t nodes_ = 0;
  std::vector<double> v_;
};

using ScalarField = NodeField<1>;
using VectorField = NodeField<3>;
using MatrixField = NodeField<9>;
/// Internal state (p, gamma): nine plastic-distortion entries plus one
/// scalar hardening variable per node.
using StateField = NodeField<10>;
inline constexpr int kStateDim = 10;
/// One node's worth of internal state or dual stress.
using StateVec = std::array<double, kStateDim>;

inline StateVec get_state(const StateField& f, std::size_t node) {
  StateVec v;
  for (int i = 0; i < kStateDim; ++i) v[i] = f(node, i);
  return v;
}
inline void set_state(StateField& f, std::size_t node, const StateVec& v) {
  for (int i = 0; i < kStateDim; ++i) f(node, i) = v[i];
}

inline Mat3 get_mat(const MatrixField& f, std::size_t node) {
  Mat3 m;
  for (int i = 0; i < 9; ++i) m.a[i] = f(node, i);
  return m;
}
inline void set_mat(MatrixField& f, std::size_t node, const Mat3& m) {
  for (int i = 0; i < 9; ++i) f(node, i) = m.a[i];
}

/// p-block extraction z -> p (row-major 3x3 per node).
inline MatrixField state_p_block(const StateField& z) {
  MatrixField p(z.nodes());
  for (std::size_t n = 0; n < z.nodes(); ++n)
    for (int i = 0; i < 9; ++i) p(n, i) = z(n, i);
  return p;
}

/// Adjoint embedding tau -> (vec tau, 0).
inline StateField embed_matrix(const MatrixField& t) {
  StateField z(t.nodes());
  for (std::size_t n = 0; n < t.nodes(); ++n) {
    for (int i = 0; i < 9; ++i) z(n, i) = t(n, i);
    z(n, 9) = 0.0;
  }
  return z;
}

inline void y_axpy(double a, const StateField& x, StateField& y) {
  y.check_same(x);
  for (std::size_t i = 0; i < y.size(); ++i) y[i] += a * x[i];
}

template <int N>
double node_norm(const NodeField<N>& f, std::size_t node) {
  double s = 0.0;
  for (int c = 0; c < N; ++c) s += f(node, c) * f(node, c);
  return std::sqrt(s);
}

/// Trapezoid-weighted inner product; for matrix fields this is the
/// integrated Frobenius pairing.
template <int N>
double inner(const Grid& g, const NodeField<N>& x, const NodeField<N>& y) {
  x.check_same(y);
  if (x.nodes() != g.node_count())
    throw std::invalid_argument("inner: field does not match the grid");
  double s = 0.0;
  for (std::size_t n = 0; n < x.nodes(); ++n) {
    double t = 0.0;
    for (int c = 0; c < N; ++c) t += x(n, c) * y(n, c);
    s += g.weight(n) * t;
  }
  return s;
}

template <int N>
double norm2(const Grid& g, const NodeField<N>& x) {
  return std::sqrt(inner(g, x, x));
}

/// L^q norm with q >= 1: (sum_n w_n |x_n|^q)^(1/q) over nodewise
/// Euclidean/Frobenius magnitudes.
template <int N>
double lq_norm(const Grid& g, const NodeField<N>& x, double q) {
  if (!(q >= 1.0)) throw std::invalid_argument("lq_norm: q must be >= 1");
  if (x.nodes() != g.node_count())
    throw std::invalid_argument("lq_norm: field does not match the grid");
  double s = 0.0;
  for (std::size_t n = 0; n < x.nodes(); ++n)
    s += g.weight(n) * std::pow(node_norm(x, n), q);
  return std::pow(s, 1.0 / q);
}

/// sum_n w_n |x_n|^q without the outer root; the ledger accumulates these.
template <int N>
double lq_norm_pow(const Grid& g, const NodeField<N>& x, double q) {
  if (!(q >= 1.0)) throw std::invalid_argument("lq_norm_pow: q must be >= 1");
  double s = 0.0;
  for (std::size_t n = 0; n < x.nodes(); ++n)
    s += g.weight(n) * std::pow(node_norm(x, n), q);
  return s;
}

template <int N>
double sup_norm(const NodeField<N>& x) {
  double m = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) m = std::max(m, std::abs(x[i]));
  return m;
}

/// Pointwise symmetric part, deviator, skew part, trace of a matrix field.
inline MatrixField sym_field(const MatrixField& f) {
  MatrixField out(f.nodes());
  for (std::size_t n = 0; n < f.nodes(); ++n) set_mat(out, n, sym(get_mat(f, n)));
  return out;
}
inline MatrixField dev_field(const MatrixField& f) {
  MatrixField out(f.nodes());
  for (std::size_t n = 0; n < f.nodes(); ++n) set_mat(out, n, dev(get_mat(f, n)));
  return out;
}
inline MatrixField skew_field(const MatrixField& f) {
  MatrixField out(f.nodes());
  for (std::size_t n = 0; n < f.nodes(); ++n) set_mat(out, n, skew(get_mat(f, n)));
  return out;
}
inline ScalarField trace_field(const MatrixField& f) {
  ScalarField out(f.nodes());
  for (std::size_t n = 0; n < f.nodes(); ++n) out(n, 0) = trace(get_mat(f, n));
  return out;
}

} // namespace gradplast
