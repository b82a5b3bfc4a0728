#include "gradplast/elasticity.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <vector>

#include "stencil.hpp"

namespace gradplast {

using detail::StencilTerm;
using detail::derivative_stencil;

ElasticTensor::ElasticTensor(const Grid& g, double lambda, double mu)
    : lambda_(g), mu_(g) {
  lambda_.fill(lambda);
  mu_.fill(mu);
  validate();
}

ElasticTensor::ElasticTensor(const Grid& g, ScalarField lambda, ScalarField mu)
    : lambda_(std::move(lambda)), mu_(std::move(mu)) {
  if (lambda_.nodes() != g.node_count() || mu_.nodes() != g.node_count())
    throw std::invalid_argument("ElasticTensor: Lame field size mismatch");
  validate();
}

void ElasticTensor::validate() {
  min_eig_ = std::numeric_limits<double>::infinity();
  max_eig_ = 0.0;
  for (std::size_t n = 0; n < mu_.nodes(); ++n) {
    const double m2 = 2.0 * mu_(n, 0);
    const double k3 = 3.0 * lambda_(n, 0) + m2;
    if (!(m2 > 0.0) || !(k3 > 0.0))
      throw std::invalid_argument("ElasticTensor: needs mu > 0 and 3 lambda + 2 mu > 0");
    min_eig_ = std::min(min_eig_, std::min(m2, k3));
    max_eig_ = std::max(max_eig_, std::max(m2, k3));
  }
}

namespace {

double flat_dot(const VectorField& x, const VectorField& y) {
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) s += x[i] * y[i];
  return s;
}

double flat_norm(const VectorField& x) { return std::sqrt(flat_dot(x, x)); }

} // namespace

ElasticSystem::ElasticSystem(const Grid& g, ElasticTensor tensor, ElasticSolveOptions opts)
    : grid_(g), tensor_(std::move(tensor)), opts_(opts),
      grad_(9 * g.node_count(), 3 * g.node_count()),
      interior_(g.node_count(), 0), jacobi_(3 * g.node_count(), 0.0) {
  const std::size_t nx = g.nx(), ny = g.ny(), nz = g.nz();
  const std::array<std::size_t, 3> strides = {1, nx, nx * ny};
  const std::array<std::size_t, 3> dims = {nx, ny, nz};

  // Gradient rows: (grad u)_{r,c} = d_c u_r, flat row 9*node + 3r + c.
  std::vector<std::pair<std::size_t, double>> row;
  for (std::size_t k = 0; k < nz; ++k)
    for (std::size_t j = 0; j < ny; ++j)
      for (std::size_t i = 0; i < nx; ++i) {
        const std::size_t node = g.index(i, j, k);
        interior_[node] = g.on_boundary(i, j, k) ? 0 : 1;
        const std::array<std::size_t, 3> pos = {i, j, k};
        for (int r = 0; r < 3; ++r)
          for (int c = 0; c < 3; ++c) {
            row.clear();
            const auto st = derivative_stencil(pos[c], dims[c], g.spacing(c));
            for (const StencilTerm& s : st) {
              if (s.coeff == 0.0) continue;
              const std::size_t nb =
                  node + static_cast<std::size_t>(static_cast<long>(strides[c]) * s.offset);
              row.emplace_back(3 * nb + r, s.coeff);
            }
            grad_.append_row(row);
          }
      }

  // Exact stiffness diagonal. The column of the gradient matrix belonging
  // to DOF (nb, r) evaluates at node "node" to e_r (x) v with v_c the
  // stencil coefficient of nb along axis c; its energy density there is
  // mu (|v|^2 + v_r^2) + lambda v_r^2.
  struct NeighborRow {
    std::size_t nb;
    std::array<double, 3> v;
  };
  std::vector<NeighborRow> local;
  for (std::size_t k = 0; k < nz; ++k)
    for (std::size_t j = 0; j < ny; ++j)
      for (std::size_t i = 0; i < nx; ++i) {
        const std::size_t node = g.index(i, j, k);
        const std::array<std::size_t, 3> pos = {i, j, k};
        local.clear();
        for (int c = 0; c < 3; ++c) {
          const auto st = derivative_stencil(pos[c], dims[c], g.spacing(c));
          for (const StencilTerm& s : st) {
            if (s.coeff == 0.0) continue;
            const std::size_t nb =
                node + static_cast<std::size_t>(static_cast<long>(strides[c]) * s.offset);
            auto it = std::find_if(local.begin(), local.end(),
                                   [nb](const NeighborRow& e) { return e.nb == nb; });
            if (it == local.end()) {
              local.push_back({nb, {0.0, 0.0, 0.0}});
              it = std::prev(local.end());
            }
            it->v[c] += s.coeff;
          }
        }
        const double w = g.weight(node);
        const double lam = tensor_.lambda(node), mu = tensor_.mu(node);
        for (const NeighborRow& e : local) {
          const double v2 = e.v[0] * e.v[0] + e.v[1] * e.v[1] + e.v[2] * e.v[2];
          for (int r = 0; r < 3; ++r) {
            const double vr2 = e.v[r] * e.v[r];
            jacobi_[3 * e.nb + r] += w * (mu * (v2 + vr2) + lam * vr2);
          }
        }
      }
  for (std::size_t n = 0; n < g.node_count(); ++n)
    if (!interior_[n])
      for (int r = 0; r < 3; ++r) jacobi_[3 * n + r] = 1.0;
}

void ElasticSystem::zero_boundary(VectorField& u) const {
  for (std::size_t n = 0; n < grid_.node_count(); ++n)
    if (!interior_[n])
      for (int r = 0; r < 3; ++r) u(n, r) = 0.0;
}

MatrixField ElasticSystem::gradient(const VectorField& u) const {
  MatrixField out(u.nodes());
  grad_.apply(u.data(), out.data());
  return out;
}

VectorField ElasticSystem::apply_stiffness(const VectorField& u) const {
  VectorField v = u;
  zero_boundary(v);
  MatrixField m = gradient(v);
  for (std::size_t n = 0; n < m.nodes(); ++n) {
    const Mat3 s = grid_.weight(n) * tensor_.apply(n, sym(get_mat(m, n)));
    set_mat(m, n, s);
  }
  VectorField y(u.nodes());
  grad_.apply_transpose(m.data(), y.data());
  zero_boundary(y);
  return y;
}

ElasticSystem::CgOutcome ElasticSystem::solve_cg(const VectorField& rhs, VectorField& u,
                                                 double tol) const {
  const double norm_b = flat_norm(rhs);
  if (norm_b == 0.0) {
    u.fill(0.0);
    return {0, 0.0};
  }
  // Solve past the contract so that downstream operator identities see
  // solver noise well below their own tolerances.
  const double target = std::min(tol, std::max(tol * opts_.target_factor, opts_.floor));

  zero_boundary(u);
  VectorField r = rhs;
  r -= apply_stiffness(u);
  VectorField z(u.nodes()), p(u.nodes()), q(u.nodes());
  std::size_t it = 0;
  double rel = flat_norm(r) / norm_b;

  while (rel > target && it < opts_.max_iterations) {
    for (std::size_t i = 0; i < z.size(); ++i) z[i] = r[i] / jacobi_[i];
    double rz = flat_dot(r, z);
    p = z;
    while (it < opts_.max_iterations) {
      q = apply_stiffness(p);
      const double pq = flat_dot(p, q);
      if (!(pq > 0.0)) {
        std::ostringstream msg;
        msg << "elastic CG: non-positive curvature " << pq << " at iteration " << it;
        throw SolveError(msg.str());
      }
      const double alpha = rz / pq;
      for (std::size_t i = 0; i < u.size(); ++i) u[i] += alpha * p[i];
      for (std::size_t i = 0; i < r.size(); ++i) r[i] -= alpha * q[i];
      ++it;
      const double rn = flat_norm(r);
      if (rn <= target * norm_b) break;
      for (std::size_t i = 0; i < z.size(); ++i) z[i] = r[i] / jacobi_[i];
      const double rz_new = flat_dot(r, z);
      const double beta = rz_new / rz;
      rz = rz_new;
      for (std::size_t i = 0; i < p.size(); ++i) p[i] = z[i] + beta * p[i];
    }
    // Recurrence reached its goal (or budget ran out): confirm against the
    // true residual before trusting it.
    r = rhs;
    r -= apply_stiffness(u);
    rel = flat_norm(r) / norm_b;
  }

  if (rel > tol) {
    std::ostringstream msg;
    msg << "elastic CG: relative residual " << rel << " above tolerance " << tol << " after "
        << it << " iterations";
    throw SolveError(msg.str());
  }
  return {it, rel};
}

namespace {

void check_symmetric(const MatrixField& x, const char* what) {
  double max_norm = 0.0, max_skew = 0.0;
  for (std::size_t n = 0; n < x.nodes(); ++n) {
    const Mat3 m = get_mat(x, n);
    max_norm = std::max(max_norm, norm(m));
    max_skew = std::max(max_skew, norm(skew(m)));
  }
  if (max_skew > 1e-12 * std::max(1.0, max_norm)) {
    std::ostringstream msg;
    msg << what << ": input must be pointwise symmetric, skew magnitude " << max_skew;
    throw std::invalid_argument(msg.str());
  }
}

} // namespace

ElasticResult ElasticSystem::solve_dirichlet(const MatrixField& eps_p, const VectorField& b,
                                             std::optional<double> tol_override,
                                             const VectorField* initial_guess) const {
  if (eps_p.nodes() != grid_.node_count() || b.nodes() != grid_.node_count())
    throw std::invalid_argument("solve_dirichlet: field size mismatch");
  check_symmetric(eps_p, "solve_dirichlet");

  MatrixField t(eps_p.nodes());
  for (std::size_t n = 0; n < t.nodes(); ++n)
    set_mat(t, n, grid_.weight(n) * tensor_.apply(n, get_mat(eps_p, n)));
  VectorField rhs(grid_);
  grad_.apply_transpose(t.data(), rhs.data());
  for (std::size_t n = 0; n < rhs.nodes(); ++n)
    for (int r = 0; r < 3; ++r) rhs(n, r) += grid_.weight(n) * b(n, r);
  zero_boundary(rhs);

  ElasticResult res;
  res.u = initial_guess ? *initial_guess : VectorField(grid_);
  if (initial_guess) res.u.check_same(rhs);
  const auto out = solve_cg(rhs, res.u, tol_override.value_or(opts_.tol));
  res.iterations = out.iterations;
  res.rel_residual = out.rel_residual;

  res.sym_grad_u = sym_field(gradient(res.u));
  res.sigma = MatrixField(grid_);
  for (std::size_t n = 0; n < res.sigma.nodes(); ++n)
    set_mat(res.sigma, n,
            tensor_.apply(n, get_mat(res.sym_grad_u, n) - get_mat(eps_p, n)));

  const double den = norm2(grid_, eps_p) + norm2(grid_, b);
  res.stability_constant = den > 0.0 ? norm2(grid_, res.sym_grad_u) / den : 0.0;
  return res;
}

MatrixField ElasticSystem::project_p(const MatrixField& x, std::optional<double> tol_override,
                                     const VectorField* initial_guess,
                                     VectorField* u_out) const {
  ElasticResult res = solve_dirichlet(x, VectorField(grid_), tol_override, initial_guess);
  if (u_out) *u_out = std::move(res.u);
  return std::move(res.sym_grad_u);
}

MatrixField ElasticSystem::project_q(const MatrixField& x,
                                     std::optional<double> tol_override) const {
  MatrixField out = x;
  out -= project_p(x, tol_override);
  return out;
}

namespace {

// Cyclic Jacobi eigensolver for the nodewise 10x10 hardening matrix.
// a holds the symmetric matrix row-major and is overwritten; eigenvalues
// land on its diagonal, eigenvectors in the columns of v.
void jacobi_eigen(std::array<double, kStateDim * kStateDim>& a,
                  std::array<double, kStateDim * kStateDim>& v) {
  constexpr int N = kStateDim;
  for (int i = 0; i < N; ++i)
    for (int j = 0; j < N; ++j) v[i * N + j] = i == j ? 1.0 : 0.0;
  double total = 0.0;
  for (double x : a) total += x * x;
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (int i = 0; i < N; ++i)
      for (int j = i + 1; j < N; ++j) off += a[i * N + j] * a[i * N + j];
    if (off <= 1e-28 * total) return;
    for (int p = 0; p < N - 1; ++p)
      for (int q = p + 1; q < N; ++q) {
        const double apq = a[p * N + q];
        if (apq == 0.0) continue;
        const double theta = (a[q * N + q] - a[p * N + p]) / (2.0 * apq);
        const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (int k = 0; k < N; ++k) {
          const double akp = a[k * N + p], akq = a[k * N + q];
          a[k * N + p] = c * akp - s * akq;
          a[k * N + q] = s * akp + c * akq;
        }
        for (int k = 0; k < N; ++k) {
          const double apk = a[p * N + k], aqk = a[q * N + k];
          a[p * N + k] = c * apk - s * aqk;
          a[q * N + k] = s * apk + c * aqk;
        }
        for (int k = 0; k < N; ++k) {
          const double vkp = v[k * N + p], vkq = v[k * N + q];
          v[k * N + p] = c * vkp - s * vkq;
          v[k * N + q] = s * vkp + c * vkq;
        }
      }
  }
}

} // namespace

HardeningMap HardeningMap::isotropic(double k_iso) {
  if (!(k_iso >= 0.0)) throw std::invalid_argument("HardeningMap: k_iso must be >= 0");
  HardeningMap h;
  h.isotropic_ = true;
  h.k_iso_ = k_iso;
  h.min_eig_ = 0.0;
  h.max_eig_ = k_iso;
  return h;
}

HardeningMap HardeningMap::general(const std::array<double, kStateDim * kStateDim>& rows) {
  constexpr int N = kStateDim;
  HardeningMap h;
  h.isotropic_ = false;
  h.m_ = rows;
  double max_abs = 0.0;
  for (double x : rows) max_abs = std::max(max_abs, std::abs(x));
  for (int i = 0; i < N; ++i)
    for (int j = i + 1; j < N; ++j)
      if (std::abs(rows[i * N + j] - rows[j * N + i]) > 1e-12 * std::max(1.0, max_abs))
        throw std::invalid_argument("HardeningMap: matrix must be symmetric");

  std::array<double, N * N> a = rows, v{};
  jacobi_eigen(a, v);
  h.min_eig_ = std::numeric_limits<double>::infinity();
  h.max_eig_ = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < N; ++i) {
    h.min_eig_ = std::min(h.min_eig_, a[i * N + i]);
    h.max_eig_ = std::max(h.max_eig_, a[i * N + i]);
  }
  if (h.min_eig_ < -1e-12 * std::max(1.0, std::abs(h.max_eig_)))
    throw std::invalid_argument("HardeningMap: matrix must be positive semi-definite");

  // Symmetric square root through the same eigenbasis, negatives clamped.
  for (int i = 0; i < N; ++i)
    for (int j = 0; j < N; ++j) {
      double s = 0.0;
      for (int k = 0; k < N; ++k) {
        const double lam = std::max(a[k * N + k], 0.0);
        s += v[i * N + k] * std::sqrt(lam) * v[j * N + k];
      }
      h.sqrt_m_[i * N + j] = s;
    }
  h.min_eig_ = std::max(h.min_eig_, 0.0);
  return h;
}

namespace {

StateField nodewise_matvec(const std::array<double, kStateDim * kStateDim>& m,
                           const StateField& z) {
  constexpr int N = kStateDim;
  StateField out(z.nodes());
  for (std::size_t n = 0; n < z.nodes(); ++n)
    for (int i = 0; i < N; ++i) {
      double s = 0.0;
      for (int j = 0; j < N; ++j) s += m[i * N + j] * z(n, j);
      out(n, i) = s;
    }
  return out;
}

} // namespace

StateField HardeningMap::apply(const StateField& z) const {
  if (!isotropic_) return nodewise_matvec(m_, z);
  StateField out(z.nodes());
  for (std::size_t n = 0; n < z.nodes(); ++n) out(n, 9) = k_iso_ * z(n, 9);
  return out;
}

StateVec HardeningMap::apply_one(const StateVec& z) const {
  StateVec out{};
  if (isotropic_) {
    out[9] = k_iso_ * z[9];
    return out;
  }
  constexpr int N = kStateDim;
  for (int i = 0; i < N; ++i) {
    double s = 0.0;
    for (int j = 0; j < N; ++j) s += m_[i * N + j] * z[j];
    out[i] = s;
  }
  return out;
}

StateField HardeningMap::apply_sqrt(const StateField& z) const {
  if (!isotropic_) return nodewise_matvec(sqrt_m_, z);
  StateField out(z.nodes());
  const double s = std::sqrt(k_iso_);
  for (std::size_t n = 0; n < z.nodes(); ++n) out(n, 9) = s * z(n, 9);
  return out;
}

double HardeningMap::quadratic(const Grid& g, const StateField& z) const {
  return inner(g, apply(z), z);
}

StateField MOperator::apply(const StateField& z, std::optional<double> tol_override,
                            const VectorField* initial_guess, VectorField* u_out) const {
  const MatrixField e = sym_field(state_p_block(z));
  MatrixField q = e;
  q -= sys_->project_p(e, tol_override, initial_guess, u_out);
  MatrixField tau(q.nodes());
  for (std::size_t n = 0; n < q.nodes(); ++n)
    set_mat(tau, n, sys_->tensor().apply(n, get_mat(q, n)));
  StateField out = embed_matrix(tau);
  out += hardening_->apply(z);
  return out;
}

} // namespace gradplast
