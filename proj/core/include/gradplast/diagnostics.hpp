#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "gradplast/curl.hpp"
#include "gradplast/elasticity.hpp"
#include "gradplast/fields.hpp"
#include "gradplast/flow_rule.hpp"
#include "gradplast/grid.hpp"
#include "gradplast/rothe.hpp"

namespace gradplast {

/// One ledger record per accepted step. Energies are unhalved squared
/// norms in the trapezoid-weighted inner product; sigma_tilde is the
/// load-free stress sigma - sigma_hat, the quantity the incremental
/// estimates control. Columns that do not apply to the active rule
/// (missing certificate or potential) hold NaN and serialize as "n/a".
struct LedgerRow {
  std::size_t step = 0;
  double time = 0.0;

  double elastic = 0.0;         // |B^{1/2} sigma_tilde|^2
  double hardening = 0.0;       // (L z, z)
  double regularization = 0.0;  // eps_reg |z|^2
  double curl = 0.0;            // c1 |Curl B z|^2

  double cum_sigma_lq = 0.0;  // h sum |Sigma_lin|_q^q
  double cum_rate_lq = 0.0;   // h sum |dz/h|_{q*}^{q*}
  double initial_energy = 0.0;

  double lhs51 = 0.0, rhs51 = 0.0, slack51 = 0.0;
  double eps_young = 0.0, c_eps = 0.0;
  double lhs56 = 0.0, rhs56 = 0.0, slack56 = 0.0;

  double load_work = 0.0;        // cumulative (ell, dz)
  double identity_defect = 0.0;  // per-step reduction identity residual

  double potential = 0.0;  // F(Sigma_lin)
  double lhs69 = 0.0, rhs69 = 0.0, slack69 = 0.0;

  double elastic_rate = 0.0;  // |B^{1/2} d sigma_tilde / h|^2
  double hardening_rate = 0.0;
  double regularization_rate = 0.0;
  double curl_rate = 0.0;
  double lhs78 = 0.0, rhs78 = 0.0, slack78 = 0.0;

  double step_dissipation = 0.0;  // (Sigma_lin, dz)
  double cum_dissipation = 0.0;
  double min_pointwise = 0.0;  // min over nodes of g(Sigma) . Sigma

  bool pass = true;
};

constexpr std::size_t kLedgerColumns = 33;
/// CSV header names aligned with ledger_row_values.
const std::array<const char*, kLedgerColumns>& ledger_column_names();
std::array<double, kLedgerColumns> ledger_row_values(const LedgerRow& r);

/// Streaming evaluator of the discrete incremental energy estimates.
///
/// Feed rows in step order, either directly or as a run observer. Row 0
/// freezes the initial energy budget, the slack tolerance
/// 1e-8 (E_0 + 1), and the virtual initial rate z_dot_0 = g(Sigma_lin_0)
/// whose load-free stress response seeds the rate estimate (one extra
/// elasticity solve). Every later row evaluates four cumulative
/// inequalities: the a-priori energy bound in certificate form, its
/// Young-split variant with logged constants, the potential-form bound
/// (potential rules only), and the rate bound obtained from differences
/// of consecutive inclusions. All are report-only; pass means every
/// applicable slack stayed above -tol_energy.
class EnergyLedger {
public:
  EnergyLedger(const ElasticSystem& sys, const CurlOperator& curl,
               const HardeningMap& hardening, const FlowRule& rule, double c1,
               double eps_reg);

  /// Append the next step; n must equal rows().size(). Returns the row
  /// verdict.
  bool push(std::size_t n, double t, double h, const StateField& z_prev,
            const StateField& z, const StateField& sigma_lin, const MatrixField& sigma,
            const MatrixField& sigma_hat);
  bool push(const StepView& v);

  const std::vector<LedgerRow>& rows() const { return rows_; }
  double tol_energy() const { return tol_; }
  double eps_young() const { return eps_young_; }
  double c_eps() const { return c_eps_; }
  bool has_certificate() const { return has_cert_; }
  bool has_potential() const { return has_pot_; }
  std::size_t failures() const { return failures_; }
  bool passed() const { return failures_ == 0; }

private:
  const ElasticSystem* sys_;
  const CurlOperator* curl_;
  const HardeningMap* hard_;
  const FlowRule* rule_;
  double c1_, eps_;

  GrowthCertificate cert_;
  bool has_cert_ = false;
  bool has_pot_ = false;
  double q_ = 2.0, qs_ = 2.0;
  double eps_young_ = 0.0, c_eps_ = 0.0;

  double e0_ = 0.0, tol_ = 0.0, vol_ = 0.0, pot0_ = 0.0;
  double rate_sum0_ = 0.0;

  MatrixField prev_sigma_tilde_;
  StateField prev_ell_;
  StateField prev_rtz_;

  double cum_load_work_ = 0.0, cum_lower51_ = 0.0, cum56_ = 0.0, cum_cload56_ = 0.0;
  double cum69_ = 0.0, cum_load_rate_ = 0.0, cum78_load_ = 0.0;
  double cum_sigma_lq_ = 0.0, cum_rate_lq_ = 0.0, cum_diss_ = 0.0;

  std::size_t failures_ = 0;
  std::vector<LedgerRow> rows_;
};

/// Replay a stored trajectory (recorded with extras) through a fresh
/// ledger; identical to feeding the run observer.
EnergyLedger ledger_from_trajectory(const ElasticSystem& sys, const CurlOperator& curl,
                                    const HardeningMap& hardening, const FlowRule& rule,
                                    double c1, double eps_reg, const Trajectory& traj);

/// Dissipation and free-energy audit of a stored trajectory.
struct DissipationReport {
  std::size_t steps = 0;
  double min_step = 0.0;       // min over n of (Sigma_lin, dz)
  double min_pointwise = 0.0;  // min over steps and nodes of g(Sigma) . Sigma
  double max_imbalance = 0.0;  // max over n of Psi_n - Psi_{n-1} - stress power
  double tolerance = 0.0;
  std::size_t violations = 0;
  bool passed() const { return violations == 0; }
};

/// Checks, per slab: the integrated dissipation (Sigma_lin, dz) >= -tol,
/// the nodewise product g(Sigma) . Sigma >= 0 exactly, and the discrete
/// free-energy imbalance Psi_n - Psi_{n-1} <= (sigma_n, sym grad du) + tol
/// with Psi the full stored energy (compliance form). Requires extras.
DissipationReport dissipation_check(const ElasticSystem& sys, const CurlOperator& curl,
                                    const HardeningMap& hardening, const FlowRule& rule,
                                    double c1, double eps_reg, const Trajectory& traj,
                                    double tol);

/// Empirical probe of the generalized Korn ratio
/// |p| / (|sym p| + |Curl p|) over admissible (tangential-trace-free)
/// matrix fields.
struct KornStatistics {
  std::size_t samples = 0;   // admissible samples evaluated
  std::size_t rejected = 0;  // raw draws that violated the mask
  double max_ratio = 0.0;
  double mean_ratio = 0.0;
  double max_ratio_optimized = 0.0;  // after projected gradient ascent
  bool degenerate_found = false;     // nonzero p with zero denominator
};

/// Draws cycle through random fields, nodewise skew fields, sampled
/// analytic gradients of vector potentials (including rigid rotations,
/// whose unmasked limit is the constant-skew counterexample), and
/// rowwise curl-free fields. Draws violating the mask are counted
/// rejected and replaced by their masked projection. Ascent runs
/// projected gradient steps on the squared ratio from the best starts;
/// a zero denominator against nonzero p flags a hard failure.
KornStatistics korn_probe(const Grid& g, const CurlOperator& curl, std::size_t samples,
                          std::size_t ascent_starts, std::size_t ascent_iterations,
                          std::uint64_t seed);

/// Two solves of the same scenario with perturbed solver internals; the
/// monotone structure makes the discrete solution unique, so all
/// difference energies must vanish to solver accuracy.
struct UniquenessReport {
  std::size_t steps = 0;
  double max_curl_diff = 0.0;    // max_n |Curl B (p1 - p2)|
  double max_stress_diff = 0.0;  // max_n |B^{1/2}(sigma1 - sigma2)|
  double max_state_diff = 0.0;   // max_n |L^{1/2}(z1 - z2)|
  double curl_scale = 0.0, stress_scale = 0.0, state_scale = 0.0;
  double max_gamma_diff = 0.0;  // |gamma1 - gamma2|
  double gamma_bound = 0.0;     // sqrt((1/alpha) max (L dz, dz))
  bool gamma_bound_holds = true;
  double tolerance = 0.0;  // relative
  bool passed = false;
};

UniquenessReport uniqueness_test(const ElasticSystem& sys, const CurlOperator& curl,
                                 const HardeningMap& hardening, const FlowRule& rule,
                                 double c1, double eps_reg, const RotheOptions& opts,
                                 const RotheScheme::LoadFn& load, const StateField& z0,
                                 double total_time, std::size_t steps, double perturbation,
                                 std::uint64_t seed, double tol_unique = 1e-8);

/// Refinement study: time levels double the step count; the eps sweep
/// reruns the base level under each regularization weight.
struct ConvergenceTable {
  std::vector<std::size_t> step_counts;
  std::vector<double> time_differences;  // |z_N(T) - z_{2N}(T)|, consecutive
  bool time_monotone = false;
  double final_ratio = 0.0;  // last difference over the one before
  std::vector<double> eps_values;
  std::vector<double> eps_differences;
  bool eps_monotone = false;
};

/// Levels are independent runs; workers > 1 executes them concurrently
/// (the load callable must then be safe to invoke from several threads).
/// Results merge by level index, so the table is identical for any worker
/// count.
ConvergenceTable convergence_study(const ElasticSystem& sys, const CurlOperator& curl,
                                   const HardeningMap& hardening, const FlowRule& rule,
                                   double c1, double eps_reg, const RotheOptions& opts,
                                   const RotheScheme::LoadFn& load, const StateField& z0,
                                   double total_time, std::size_t base_steps,
                                   std::size_t levels,
                                   const std::vector<double>& eps_sweep = {},
                                   std::size_t workers = 1);

}  // namespace gradplast
