#include "gradplast/curl.hpp"

#include <array>
#include <cmath>

#include "gradplast/rng.hpp"
#include "stencil.hpp"

namespace gradplast {

using detail::StencilTerm;
using detail::derivative_stencil;

CurlOperator::CurlOperator(const Grid& g)
    : grid_(g), mask_(g), curl_(9 * g.node_count(), 9 * g.node_count()) {
  const std::size_t nx = g.nx(), ny = g.ny(), nz = g.nz();
  const std::array<std::size_t, 3> strides = {1, nx, nx * ny};
  const std::array<std::size_t, 3> dims = {nx, ny, nz};

  // Output component oc of row r pairs a positive derivative along axis
  // d_plus of input column c_plus with a negative one along d_minus of
  // c_minus: (curl v)_0 = d1 v2 - d2 v1, cyclic.
  struct TermSpec {
    int axis;
    int col;
    double sign;
  };
  const std::array<std::array<TermSpec, 2>, 3> curl_terms = {{
      {{{1, 2, 1.0}, {2, 1, -1.0}}},
      {{{2, 0, 1.0}, {0, 2, -1.0}}},
      {{{0, 1, 1.0}, {1, 0, -1.0}}},
  }};

  std::vector<std::pair<std::size_t, double>> row;
  for (std::size_t k = 0; k < nz; ++k)
    for (std::size_t j = 0; j < ny; ++j)
      for (std::size_t i = 0; i < nx; ++i) {
        const std::size_t node = g.index(i, j, k);
        const std::array<std::size_t, 3> pos = {i, j, k};
        for (int r = 0; r < 3; ++r)
          for (int oc = 0; oc < 3; ++oc) {
            row.clear();
            for (const TermSpec& term : curl_terms[oc]) {
              const int a = term.axis;
              const auto st = derivative_stencil(pos[a], dims[a], g.spacing(a));
              for (const StencilTerm& s : st) {
                if (s.coeff == 0.0) continue;
                const std::size_t neighbor =
                    node + static_cast<std::size_t>(static_cast<long>(strides[a]) * s.offset);
                row.emplace_back(9 * neighbor + 3 * r + term.col, term.sign * s.coeff);
              }
            }
            curl_.append_row(row);
          }
      }
}

MatrixField CurlOperator::curl(const MatrixField& f) const {
  MatrixField out(f.nodes());
  curl_.apply(f.data(), out.data());
  return out;
}

MatrixField CurlOperator::curl_transpose(const MatrixField& f) const {
  MatrixField out(f.nodes());
  curl_.apply_transpose(f.data(), out.data());
  return out;
}

MatrixField CurlOperator::curl_masked(const MatrixField& f) const {
  MatrixField g = f;
  mask_.apply(g);
  return curl(g);
}

MatrixField CurlOperator::curl_curl(const MatrixField& f) const {
  MatrixField y = curl_masked(f);
  for (std::size_t n = 0; n < y.nodes(); ++n) {
    const double w = grid_.weight(n);
    for (int c = 0; c < 9; ++c) y(n, c) *= w;
  }
  MatrixField t(f.nodes());
  curl_.apply_transpose(y.data(), t.data());
  mask_.apply(t);
  for (std::size_t n = 0; n < t.nodes(); ++n) {
    const double inv_w = 1.0 / grid_.weight(n);
    for (int c = 0; c < 9; ++c) t(n, c) *= inv_w;
  }
  return t;
}

double CurlOperator::curl_curl_norm_estimate(int iterations, std::uint64_t seed) const {
  Rng rng(seed);
  MatrixField v(grid_);
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = rng.gaussian();
  mask_.apply(v);
  double lambda = 0.0;
  for (int it = 0; it < iterations; ++it) {
    const double nv = norm2(grid_, v);
    if (nv == 0.0) return 0.0;
    v *= 1.0 / nv;
    MatrixField w = curl_curl(v);
    lambda = inner(grid_, v, w);
    v = std::move(w);
  }
  return std::abs(lambda);
}

} // namespace gradplast
