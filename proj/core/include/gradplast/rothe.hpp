#pragma once

#include <functional>
#include <optional>
#include <utility>
#include <vector>

#include "gradplast/curl.hpp"
#include "gradplast/elasticity.hpp"
#include "gradplast/fields.hpp"
#include "gradplast/flow_rule.hpp"

namespace gradplast {

/// The reduced dual stress operator of the incremental problem,
///
///   Sigma_lin(z) = ell - (M + eps_reg I) z - c1 B^T A_h B z,
///
/// where M = B^T C Q sym B + L, A_h the masked curl-curl, and
/// ell = B^T sigma_hat with sigma_hat the elastic stress response to the
/// current body load alone. The equivalence with the direct definition
/// B^T sigma(z) - L z - eps_reg z - c1 B^T A_h B z follows from
/// superposition of the equilibrium solves and is covered by tests.
///
/// apply() warm-starts its internal projection solve with the last
/// displacement, so applications are stateful but deterministic for a
/// fixed call sequence.
class SigmaLinOperator {
public:
  SigmaLinOperator(const ElasticSystem& sys, const CurlOperator& curl,
                   const HardeningMap& hardening, double c1, double eps_reg);

  /// Solve the load-only elastic problem and cache ell = B^T sigma_hat.
  const ElasticResult& set_load(const VectorField& b);
  const ElasticResult& load_response() const { return load_; }
  const StateField& ell() const { return ell_; }

  StateField apply(const StateField& z) const;
  /// The homogeneous part -(M + eps_reg I + c1 B^T A_h B) z.
  StateField apply_homogeneous(const StateField& z) const;

  /// Tighten the inner elasticity tolerance (inexactness must stay below
  /// the outer fixed-point residual).
  void set_solve_tol(double tol) { solve_tol_ = tol; }

  double c1() const { return c1_; }
  double eps_reg() const { return eps_reg_; }
  const ElasticSystem& system() const { return *sys_; }
  const CurlOperator& curl() const { return *curl_; }
  const HardeningMap& hardening() const { return m_.hardening(); }

private:
  const ElasticSystem* sys_;
  const CurlOperator* curl_;
  MOperator m_;
  double c1_, eps_reg_;
  std::optional<double> solve_tol_;
  StateField ell_;
  ElasticResult load_;
  mutable VectorField warm_m_;
  VectorField warm_hat_;
};

/// Two-point Gauss offset used for the slab-averaged loads; exported so
/// replays can reproduce the averages bit-exactly.
inline constexpr double kSlabGaussOffset = 0.28867513459481287;

struct RotheOptions {
  double newton_tol = 1e-11;       // residual bound factor, see StepReport
  std::size_t max_iterations = 400;
  double initial_damping = 1.0;
  double min_damping = 1.0 / 64.0;
  int anderson_depth = 5;
  bool use_anderson = true;
};

struct StepReport {
  std::size_t iterations = 0;
  double residual = 0.0;  // |z - T(z)|_W at acceptance
  double tolerance = 0.0; // newton_tol (|z_prev|_W + h)
  double damping = 1.0;   // damping in effect at acceptance
};

/// One accepted time step, handed to observers during a run. References
/// stay valid only for the duration of the callback.
struct StepView {
  std::size_t n;            // 0 for the initial state
  double t;
  double h;                 // 0 for the initial state
  const StateField& z_prev; // == z at n = 0
  const StateField& z;
  const StateField& sigma_lin; // Sigma_lin at z under the step's load
  const StateField& ell;
  const VectorField& b_bar; // slab-averaged load (b(0) at n = 0)
  const VectorField& u;     // equilibrium displacement at (z, b_bar)
  const MatrixField& sigma; // C(sym grad u - sym B z)
  const MatrixField& sigma_hat;
  const VectorField& u_hat;
  const StepReport& report; // default-initialized at n = 0
};

struct Trajectory {
  double dt = 0.0;
  std::vector<double> times;         // t_0 .. t_N
  std::vector<StateField> states;    // z_0 .. z_N
  std::vector<StepReport> reports;   // aligned with states, [0] is blank
  bool aborted = false;              // observer returned false
  std::size_t aborted_at = 0;        // step at which the run stopped
  bool store_extras = false;
  std::vector<StateField> sigma_lin; // only when store_extras
  std::vector<MatrixField> sigma;
  std::vector<MatrixField> sigma_hat;
  std::vector<VectorField> u;

  std::size_t step_count() const { return times.empty() ? 0 : times.size() - 1; }
};

/// Implicit incremental solves for the Rothe-discretized flow
///   z_n = z_{n-1} + h g(Sigma_lin(z_n)),
/// by damped fixed-point iteration with optional Anderson acceleration
/// (history restarts and damping halvings on residual growth). The
/// monotonicity of the reduced operator makes the fixed point unique;
/// perturbing the initial iterate must reproduce it, which tests assert.
class RotheScheme {
public:
  RotheScheme(const ElasticSystem& sys, const CurlOperator& curl,
              const HardeningMap& hardening, const FlowRule& rule, double c1,
              double eps_reg, RotheOptions opts = {});

  SigmaLinOperator& sigma_lin() { return slin_; }
  const SigmaLinOperator& sigma_lin() const { return slin_; }
  const RotheOptions& options() const { return opts_; }
  const FlowRule& rule() const { return *rule_; }

  /// Solve one incremental problem under the currently set load.
  std::pair<StateField, StepReport> incremental_solve(const StateField& z_prev, double h,
                                                      const StateField* initial_iterate = nullptr);

  /// Sigma_lin evaluated at the last accepted iterate.
  const StateField& last_sigma_lin() const { return last_sigma_lin_; }

  using LoadFn = std::function<VectorField(double)>;
  using Observer = std::function<bool(const StepView&)>;

  /// March n = 1..steps with slab-averaged loads (two-point Gauss per
  /// slab). The observer sees every accepted step including the initial
  /// state (n = 0) and may abort by returning false.
  Trajectory run(const LoadFn& load, const StateField& z0, double total_time,
                 std::size_t steps, bool store_extras = true, const Observer& observer = {});

private:
  StateField fixed_point_map(const StateField& z_prev, double h, const StateField& z);

  SigmaLinOperator slin_;
  const FlowRule* rule_;
  RotheOptions opts_;
  StateField last_sigma_lin_;
  VectorField warm_full_;
};

/// Rothe interpolants of a recorded trajectory: the piecewise-affine one
/// is continuous, the piecewise-constant one is right-continuous with the
/// step value on each slab. t must lie in [0, T].
StateField interpolate_affine(const Trajectory& tr, double t);
StateField interpolate_constant(const Trajectory& tr, double t);

/// L^q(0,T) time norms of both interpolants plus the h-extended constant
/// norm; the affine norm never exceeds the extended one.
struct InterpolantNorms {
  double affine;
  double constant;
  double constant_extended; // (h |z_0|^q + constant^q)^(1/q)
};
InterpolantNorms interpolant_lq_norms(const Grid& g, const Trajectory& tr, double q);

/// L^q(0,T) distance between two trajectories of the same duration under
/// their piecewise-affine (affine = true) or piecewise-constant
/// interpolants, with the W-weighted state norm in space; five-point
/// Gauss quadrature on the union mesh.
double trajectory_lq_distance(const Grid& g, const Trajectory& a, const Trajectory& b,
                              double q, bool affine);

} // namespace gradplast
