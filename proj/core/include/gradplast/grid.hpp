#pragma once

#include <array>
#include <cstddef>
#include <vector>

namespace gradplast {

/// Axis-aligned box of collocation nodes with per-axis spacing.
///
/// Nodes sit at origin + (i*hx, j*hy, k*hz) with at least three nodes per
/// axis so that one-sided second-order difference closures exist on every
/// face. Integrals over the box use trapezoidal node weights: a node weight
/// is hx*hy*hz times 1/2 for every axis on which the node is extremal.
class Grid {
public:
  Grid(std::size_t nx, std::size_t ny, std::size_t nz,
       double hx, double hy, double hz,
       std::array<double, 3> origin = {0.0, 0.0, 0.0});

  /// Convenience: n nodes per axis spanning an lx*ly*lz box.
  static Grid box(std::size_t nx, std::size_t ny, std::size_t nz,
                  double lx, double ly, double lz);

  std::size_t nx() const { return n_[0]; }
  std::size_t ny() const { return n_[1]; }
  std::size_t nz() const { return n_[2]; }
  std::size_t axis_nodes(int a) const { return n_[a]; }
  double spacing(int a) const { return h_[a]; }
  const std::array<double, 3>& origin() const { return origin_; }

  std::size_t node_count() const { return n_[0] * n_[1] * n_[2]; }

  std::size_t index(std::size_t i, std::size_t j, std::size_t k) const {
    return i + n_[0] * (j + n_[1] * k);
  }
  std::array<std::size_t, 3> coords(std::size_t idx) const {
    std::array<std::size_t, 3> c;
    c[0] = idx % n_[0];
    c[1] = (idx / n_[0]) % n_[1];
    c[2] = idx / (n_[0] * n_[1]);
    return c;
  }
  std::array<double, 3> position(std::size_t i, std::size_t j, std::size_t k) const {
    return {origin_[0] + static_cast<double>(i) * h_[0],
            origin_[1] + static_cast<double>(j) * h_[1],
            origin_[2] + static_cast<double>(k) * h_[2]};
  }

  bool on_boundary(std::size_t i, std::size_t j, std::size_t k) const {
    return i == 0 || j == 0 || k == 0 ||
           i == n_[0] - 1 || j == n_[1] - 1 || k == n_[2] - 1;
  }

  /// Trapezoidal quadrature weight of a node.
  double weight(std::size_t idx) const { return weights_[idx]; }
  const std::vector<double>& weights() const { return weights_; }

  /// Box measure: sum of all node weights equals lx*ly*lz exactly.
  double volume() const { return volume_; }

  bool same_layout(const Grid& other) const {
    return n_ == other.n_ && h_ == other.h_ && origin_ == other.origin_;
  }

private:
  std::array<std::size_t, 3> n_;
  std::array<double, 3> h_;
  std::array<double, 3> origin_;
  std::vector<double> weights_;
  double volume_ = 0.0;
};

} // namespace gradplast
