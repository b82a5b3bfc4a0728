#include "gradplast/grid.hpp"

#include <stdexcept>
#include <string>

namespace gradplast {

Grid::Grid(std::size_t nx, std::size_t ny, std::size_t nz,
           double hx, double hy, double hz,
           std::array<double, 3> origin)
    : n_{nx, ny, nz}, h_{hx, hy, hz}, origin_(origin) {
  for (int a = 0; a < 3; ++a) {
    if (n_[a] < 3)
      throw std::invalid_argument("Grid: need at least 3 nodes per axis, axis " +
                                  std::to_string(a) + " has " + std::to_string(n_[a]));
    if (!(h_[a] > 0.0))
      throw std::invalid_argument("Grid: spacing must be positive on axis " +
                                  std::to_string(a));
  }
  weights_.resize(node_count());
  const double cell = h_[0] * h_[1] * h_[2];
  for (std::size_t k = 0; k < n_[2]; ++k)
    for (std::size_t j = 0; j < n_[1]; ++j)
      for (std::size_t i = 0; i < n_[0]; ++i) {
        double w = cell;
        if (i == 0 || i == n_[0] - 1) w *= 0.5;
        if (j == 0 || j == n_[1] - 1) w *= 0.5;
        if (k == 0 || k == n_[2] - 1) w *= 0.5;
        weights_[index(i, j, k)] = w;
      }
  for (double w : weights_) volume_ += w;
}

Grid Grid::box(std::size_t nx, std::size_t ny, std::size_t nz,
               double lx, double ly, double lz) {
  return Grid(nx, ny, nz,
              lx / static_cast<double>(nx - 1),
              ly / static_cast<double>(ny - 1),
              lz / static_cast<double>(nz - 1));
}

} // namespace gradplast
