#pragma once

#include <cstdint>

#include "gradplast/fields.hpp"
#include "gradplast/grid.hpp"
#include "gradplast/mask.hpp"
#include "gradplast/sparse.hpp"

namespace gradplast {

/// Discrete row-wise Curl on node-collocated matrix fields.
///
/// Each matrix row is treated as a vector field and its curl taken with
/// second-order central differences at interior nodes and one-sided
/// second-order closures on the boundary. The stencil is stored as an
/// explicit sparse matrix; curl_transpose applies the literal transpose of
/// that matrix.
///
/// curl_curl composes mask -> curl -> quadrature weights -> transposed curl
/// -> mask -> inverse weights. With W the diagonal of trapezoid node
/// weights this is W^-1 (C M)^T W (C M): the adjoint is taken in the same
/// weighted inner product that inner() integrates, so
///   (curl_curl f, g) = (curl(mask f), curl(mask g))
/// holds exactly in exact arithmetic and the operator is self-adjoint and
/// positive semi-definite in that inner product.
class CurlOperator {
public:
  explicit CurlOperator(const Grid& g);

  const Grid& grid() const { return grid_; }
  const TangentialMask& mask() const { return mask_; }
  const Csr& stencil() const { return curl_; }

  /// Free discrete Curl, no boundary masking.
  MatrixField curl(const MatrixField& f) const;

  /// Literal transpose of curl.
  MatrixField curl_transpose(const MatrixField& f) const;

  /// Curl with the constrained tangential boundary components of the input
  /// treated as zero.
  MatrixField curl_masked(const MatrixField& f) const;

  /// A_h f, see class comment.
  MatrixField curl_curl(const MatrixField& f) const;

  /// Power-iteration estimate of the curl_curl operator norm in the
  /// weighted inner product; used to scale identity-defect tolerances.
  double curl_curl_norm_estimate(int iterations = 40, std::uint64_t seed = 12345) const;

private:
  Grid grid_;
  TangentialMask mask_;
  Csr curl_;
};

} // namespace gradplast
