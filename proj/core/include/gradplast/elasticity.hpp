#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <stdexcept>

#include "gradplast/fields.hpp"
#include "gradplast/grid.hpp"
#include "gradplast/sparse.hpp"

namespace gradplast {

/// Isotropic elastic tensor with per-node Lame fields.
///
/// apply: e -> 2 mu e + lambda tr(e) I. Positive definiteness on symmetric
/// matrices requires mu > 0 and 3 lambda + 2 mu > 0 at every node; the
/// constructor fails fast otherwise.
class ElasticTensor {
public:
  ElasticTensor(const Grid& g, double lambda, double mu);
  ElasticTensor(const Grid& g, ScalarField lambda, ScalarField mu);

  double lambda(std::size_t node) const { return lambda_(node, 0); }
  double mu(std::size_t node) const { return mu_(node, 0); }

  Mat3 apply(std::size_t node, const Mat3& e) const {
    Mat3 s = 2.0 * mu(node) * e;
    const double lt = lambda(node) * trace(e);
    s(0, 0) += lt;
    s(1, 1) += lt;
    s(2, 2) += lt;
    return s;
  }

  /// Compliance: inverse of apply on symmetric matrices.
  Mat3 apply_inverse(std::size_t node, const Mat3& s) const {
    const double m2 = 2.0 * mu(node);
    const double k3 = 3.0 * lambda(node) + m2;
    Mat3 e = (1.0 / m2) * s;
    const double corr = (1.0 / k3 - 1.0 / m2) * (trace(s) / 3.0);
    e(0, 0) += corr;
    e(1, 1) += corr;
    e(2, 2) += corr;
    return e;
  }

  /// Nodewise compliance energy density s : C^-1 s.
  double compliance_energy_density(std::size_t node, const Mat3& s) const {
    const Mat3 d = dev(s);
    const double t = trace(s);
    return ddot(d, d) / (2.0 * mu(node)) + t * t / (3.0 * (3.0 * lambda(node) + 2.0 * mu(node)));
  }

  /// Smallest nodal eigenvalue of the tensor (coercivity constant).
  double min_eigenvalue() const { return min_eig_; }
  /// Largest nodal eigenvalue.
  double max_eigenvalue() const { return max_eig_; }
  /// Smallest nodal eigenvalue of the compliance C^-1.
  double compliance_min_eigenvalue() const { return 1.0 / max_eig_; }

private:
  void validate();
  ScalarField lambda_, mu_;
  double min_eig_ = 0.0, max_eig_ = 0.0;
};

struct ElasticSolveOptions {
  double tol = 1e-10;          // contractual relative residual
  double target_factor = 1e-3; // best-effort extra reduction below tol
  double floor = 1e-14;        // do not target below this
  std::size_t max_iterations = 50000;
};

struct ElasticResult {
  VectorField u;          // displacement, zero on the boundary
  MatrixField sym_grad_u; // discrete symmetric gradient of u
  MatrixField sigma;      // C (sym grad u - eps_p)
  std::size_t iterations = 0;
  double rel_residual = 0.0;
  double stability_constant = 0.0; // |sym grad u| / (|eps_p| + |b|)
};

/// Dirichlet elasticity on the grid: assembles the discrete symmetric
/// gradient (same stencil family as the curl) and solves
///   D^T W C D u = D^T W C eps_p + W b
/// on interior displacement DOFs by Jacobi-preconditioned conjugate
/// gradients, matrix-free.
class ElasticSystem {
public:
  ElasticSystem(const Grid& g, ElasticTensor tensor, ElasticSolveOptions opts = {});

  const Grid& grid() const { return grid_; }
  const ElasticTensor& tensor() const { return tensor_; }
  const ElasticSolveOptions& options() const { return opts_; }

  /// Full discrete gradient of a displacement field (9 entries per node).
  MatrixField gradient(const VectorField& u) const;
  const Csr& gradient_stencil() const { return grad_; }
  /// Exact diagonal of the stiffness (1.0 on boundary DOFs); the CG
  /// preconditioner.
  const std::vector<double>& stiffness_diagonal() const { return jacobi_; }

  /// Stiffness application on a boundary-zero displacement field.
  VectorField apply_stiffness(const VectorField& u) const;

  /// Solve the Dirichlet problem. eps_p must be pointwise symmetric to
  /// 1e-12 relative; initial_guess, when given, seeds the CG iteration.
  ElasticResult solve_dirichlet(const MatrixField& eps_p, const VectorField& b,
                                std::optional<double> tol_override = {},
                                const VectorField* initial_guess = nullptr) const;

  /// Compatible-range projector: P x = sym grad u with
  /// D^T W C D u = D^T W C x. Input must be pointwise symmetric.
  MatrixField project_p(const MatrixField& x, std::optional<double> tol_override = {},
                        const VectorField* initial_guess = nullptr,
                        VectorField* u_out = nullptr) const;

  /// Complement Q = I - P.
  MatrixField project_q(const MatrixField& x, std::optional<double> tol_override = {}) const;

  void zero_boundary(VectorField& u) const;

private:
  struct CgOutcome {
    std::size_t iterations;
    double rel_residual;
  };
  CgOutcome solve_cg(const VectorField& rhs, VectorField& u, double tol) const;

  Grid grid_;
  ElasticTensor tensor_;
  ElasticSolveOptions opts_;
  Csr grad_;
  std::vector<std::uint8_t> interior_; // 1 = interior node
  std::vector<double> jacobi_;         // exact diagonal of the stiffness
};

/// Hardening map L on internal states: either diagonal isotropic
/// (k_iso acting on the gamma slot) or a general symmetric PSD 10x10
/// matrix applied nodewise.
class HardeningMap {
public:
  static HardeningMap isotropic(double k_iso);
  static HardeningMap general(const std::array<double, kStateDim * kStateDim>& rows);

  StateField apply(const StateField& z) const;
  StateVec apply_one(const StateVec& z) const;
  /// L^(1/2) z, used by energy ledgers.
  StateField apply_sqrt(const StateField& z) const;
  double quadratic(const Grid& g, const StateField& z) const; // (Lz, z)

  bool is_isotropic() const { return isotropic_; }
  double k_iso() const { return k_iso_; }
  /// Smallest eigenvalue of the nodewise matrix (>= 0).
  double min_eigenvalue() const { return min_eig_; }
  double max_eigenvalue() const { return max_eig_; }

private:
  HardeningMap() = default;
  bool isotropic_ = true;
  double k_iso_ = 0.0;
  std::array<double, kStateDim * kStateDim> m_{};
  std::array<double, kStateDim * kStateDim> sqrt_m_{};
  double min_eig_ = 0.0, max_eig_ = 0.0;
};

/// The monotone incremental operator z -> B^T C Q sym B z + L z.
///
/// Self-adjoint and positive semi-definite in the grid inner product up to
/// the elasticity solver tolerance; every application costs one Dirichlet
/// solve.
class MOperator {
public:
  MOperator(const ElasticSystem& sys, const HardeningMap& hardening)
      : sys_(&sys), hardening_(&hardening) {}

  StateField apply(const StateField& z, std::optional<double> tol_override = {},
                   const VectorField* initial_guess = nullptr,
                   VectorField* u_out = nullptr) const;

  const ElasticSystem& system() const { return *sys_; }
  const HardeningMap& hardening() const { return *hardening_; }

private:
  const ElasticSystem* sys_;
  const HardeningMap* hardening_;
};

/// Diagnostic thrown when the linear solver cannot meet its contract.
struct SolveError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

} // namespace gradplast
