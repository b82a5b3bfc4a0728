#pragma once

#include <array>
#include <cmath>
#include <functional>

#include "gradplast/curl.hpp"
#include "gradplast/fields.hpp"
#include "gradplast/grid.hpp"
#include "gradplast/rng.hpp"

namespace gptest {

using namespace gradplast;

inline MatrixField random_matrix_field(const Grid& g, Rng& rng, double amp = 1.0) {
  MatrixField f(g);
  for (std::size_t i = 0; i < f.size(); ++i) f[i] = amp * rng.gaussian();
  return f;
}

inline StateField random_state_field(const Grid& g, Rng& rng, double amp = 1.0) {
  StateField f(g);
  for (std::size_t i = 0; i < f.size(); ++i) f[i] = amp * rng.gaussian();
  return f;
}

/// Random state whose plastic block is traceless nodewise.
inline StateField random_traceless_state_field(const Grid& g, Rng& rng, double amp = 1.0) {
  StateField f = random_state_field(g, rng, amp);
  for (std::size_t n = 0; n < g.node_count(); ++n) {
    double tr3 = (f(n, 0) + f(n, 4) + f(n, 8)) / 3.0;
    f(n, 0) -= tr3;
    f(n, 4) -= tr3;
    f(n, 8) -= tr3;
  }
  return f;
}

inline VectorField random_vector_field(const Grid& g, Rng& rng, double amp = 1.0) {
  VectorField f(g);
  for (std::size_t i = 0; i < f.size(); ++i) f[i] = amp * rng.gaussian();
  return f;
}

/// Sample an analytic matrix-valued function on the nodes.
inline MatrixField sample_matrix_field(
    const Grid& g, const std::function<Mat3(double, double, double)>& fn) {
  MatrixField f(g);
  for (std::size_t k = 0; k < g.nz(); ++k)
    for (std::size_t j = 0; j < g.ny(); ++j)
      for (std::size_t i = 0; i < g.nx(); ++i) {
        const auto x = g.position(i, j, k);
        set_mat(f, g.index(i, j, k), fn(x[0], x[1], x[2]));
      }
  return f;
}

inline VectorField sample_vector_field(
    const Grid& g, const std::function<std::array<double, 3>(double, double, double)>& fn) {
  VectorField f(g);
  for (std::size_t k = 0; k < g.nz(); ++k)
    for (std::size_t j = 0; j < g.ny(); ++j)
      for (std::size_t i = 0; i < g.nx(); ++i) {
        const auto x = g.position(i, j, k);
        const auto v = fn(x[0], x[1], x[2]);
        const std::size_t n = g.index(i, j, k);
        for (int c = 0; c < 3; ++c) f(n, c) = v[c];
      }
  return f;
}

/// Depth of a node: minimal node distance to any face.
inline std::size_t boundary_depth(const Grid& g, std::size_t i, std::size_t j, std::size_t k) {
  auto d = [](std::size_t c, std::size_t n) { return std::min(c, n - 1 - c); };
  return std::min({d(i, g.nx()), d(j, g.ny()), d(k, g.nz())});
}

} // namespace gptest
