#pragma once

#include <array>
#include <cstddef>

namespace gradplast {
namespace detail {

struct StencilTerm {
  long offset;  // node offset along the axis
  double coeff;
};

// Second-order first-derivative stencil along one axis: central inside,
// one-sided at the two extremal nodes. Needs n >= 3, guaranteed by Grid.
inline std::array<StencilTerm, 3> derivative_stencil(std::size_t i, std::size_t n, double h) {
  const double inv2h = 1.0 / (2.0 * h);
  if (i == 0)
    return {{{0, -3.0 * inv2h}, {1, 4.0 * inv2h}, {2, -1.0 * inv2h}}};
  if (i == n - 1)
    return {{{0, 3.0 * inv2h}, {-1, -4.0 * inv2h}, {-2, 1.0 * inv2h}}};
  return {{{-1, -inv2h}, {1, inv2h}, {0, 0.0}}};
}

} // namespace detail
} // namespace gradplast
