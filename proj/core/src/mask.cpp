#include "gradplast/mask.hpp"

namespace gradplast {

TangentialMask::TangentialMask(const Grid& g) : flags_(g.node_count(), 0) {
  const std::size_t nx = g.nx(), ny = g.ny(), nz = g.nz();
  for (std::size_t k = 0; k < nz; ++k)
    for (std::size_t j = 0; j < ny; ++j)
      for (std::size_t i = 0; i < nx; ++i) {
        std::uint8_t f = 0;
        // Face with normal axis a constrains the other two columns.
        if (i == 0 || i == nx - 1) f |= 0b110;
        if (j == 0 || j == ny - 1) f |= 0b101;
        if (k == 0 || k == nz - 1) f |= 0b011;
        flags_[g.index(i, j, k)] = f;
      }
  for (std::uint8_t f : flags_)
    constrained_slots_ += 3 * static_cast<std::size_t>(((f >> 0) & 1) + ((f >> 1) & 1) + ((f >> 2) & 1));
}

void TangentialMask::apply(MatrixField& f) const {
  for (std::size_t n = 0; n < f.nodes(); ++n) {
    const std::uint8_t m = flags_[n];
    if (!m) continue;
    for (int c = 0; c < 3; ++c)
      if ((m >> c) & 1u)
        for (int r = 0; r < 3; ++r) f(n, 3 * r + c) = 0.0;
  }
}

void TangentialMask::apply_p_block(StateField& z) const {
  for (std::size_t n = 0; n < z.nodes(); ++n) {
    const std::uint8_t m = flags_[n];
    if (!m) continue;
    for (int c = 0; c < 3; ++c)
      if ((m >> c) & 1u)
        for (int r = 0; r < 3; ++r) z(n, 3 * r + c) = 0.0;
  }
}

} // namespace gradplast
