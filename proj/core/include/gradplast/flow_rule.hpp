#pragma once

#include <algorithm>
#include <cstdint>
#include <stdexcept>
#include <string>

#include "gradplast/elasticity.hpp"
#include "gradplast/fields.hpp"
#include "gradplast/grid.hpp"

namespace gradplast {

inline Mat3 dual_p(const StateVec& v) {
  Mat3 m;
  for (int i = 0; i < 9; ++i) m.a[i] = v[i];
  return m;
}
inline double dual_gamma(const StateVec& v) { return v[9]; }

inline double state_dot(const StateVec& a, const StateVec& b) {
  double s = 0.0;
  for (int i = 0; i < kStateDim; ++i) s += a[i] * b[i];
  return s;
}
inline double state_norm(const StateVec& a) { return std::sqrt(state_dot(a, a)); }

/// Constants certifying the structural inequalities of a dissipative rate
/// map v* -> g(v*) with primal exponent q and conjugate q* = q/(q-1),
/// stated through the effective over-stress rho(v*) >= 0:
///
///   joint:     alpha (rho^q / q + |g|^q* / q*) <= (g, v*) + m
///   growth:    |g|^q*                          <= m1 + alpha1 |v*|^q
///   coercive:  alpha2 rho^q                    <= (g, v*) + m2
///
/// The over-stress vanishes on the elastic region, where g = 0; coercivity
/// in the raw |v*| cannot hold for deviatoric rules (trace directions and
/// the hardening far-field never activate), which is why the certified
/// quantity is rho.
struct GrowthCertificate {
  double q = 2.0;
  double alpha = 0.0, m = 0.0;
  double alpha1 = 0.0, m1 = 0.0;
  double alpha2 = 0.0, m2 = 0.0;
  double conjugate() const { return q / (q - 1.0); }
};

/// Nodewise viscoplastic rate map g acting on dual states
/// v* = (Sigma_p, Sigma_gamma), packed like StateVec.
class FlowRule {
public:
  virtual ~FlowRule() = default;

  virtual std::string name() const = 0;
  virtual StateVec eval(const StateVec& dual) const = 0;
  /// Signed activation F(v*), positive beyond the yield surface.
  virtual double activation(const StateVec& dual) const = 0;
  /// Effective over-stress rho = max(F, 0); zero exactly on {g = 0}.
  double overstress(const StateVec& dual) const { return std::max(activation(dual), 0.0); }
  virtual bool has_potential() const = 0;
  /// Convex potential with g = grad f; throws when has_potential() is false.
  virtual double potential(const StateVec& dual) const;
  /// Certified growth constants; throws when no certificate is available.
  virtual GrowthCertificate certificate() const = 0;

  StateField eval_field(const StateField& dual) const;
  ScalarField overstress_field(const StateField& dual) const;
  /// Integral of the potential over the box (trapezoid weights).
  double potential_integral(const Grid& g, const StateField& dual) const;
};

/// Power-law over-stress rule with linear kinematic-to-isotropic coupling:
///
///   F  = |dev Sigma_p| + kappa Sigma_gamma - sigma_y,  rho = max(F, 0)
///   g_p      = eta rho^r dev Sigma_p / |dev Sigma_p|
///   g_gamma  = eta rho^r kappa
///
/// Gradient of the convex potential eta/(r+1) rho^(r+1), hence monotone
/// with g(0) = 0; during evolution Sigma_gamma = -k_iso gamma <= 0, so the
/// coupling shrinks the over-stress as gamma accumulates.
class NortonHoff final : public FlowRule {
public:
  NortonHoff(double eta, double r, double sigma_y, double kappa);

  std::string name() const override { return "norton_hoff"; }
  StateVec eval(const StateVec& dual) const override;
  double activation(const StateVec& dual) const override;
  bool has_potential() const override { return true; }
  double potential(const StateVec& dual) const override;
  GrowthCertificate certificate() const override;

  double eta() const { return eta_; }
  double rate_exponent() const { return r_; }
  double sigma_y() const { return sigma_y_; }
  double kappa() const { return kappa_; }

private:
  double eta_, r_, sigma_y_, kappa_;
};

/// Non-associative variant: the activation is the over-stress in
/// |dev Sigma_p| alone, but the flow direction picks up a skew component,
///
///   rho = max(|dev Sigma_p| - sigma_y, 0)
///   g_p = eta rho^r (dev Sigma_p + beta skew Sigma_p),  g_gamma = 0.
///
/// For beta = 0 this is still the gradient of a convex radial potential
/// and carries a certificate with nonzero offsets m. For beta != 0 the
/// map is provably non-monotone near the yield surface and no certificate
/// exists; certificate() then throws.
class NonAssociative final : public FlowRule {
public:
  NonAssociative(double eta, double r, double sigma_y, double beta = 0.0);

  std::string name() const override { return "non_associative"; }
  StateVec eval(const StateVec& dual) const override;
  double activation(const StateVec& dual) const override;
  bool has_potential() const override { return beta_ == 0.0; }
  double potential(const StateVec& dual) const override;
  GrowthCertificate certificate() const override;

  double eta() const { return eta_; }
  double rate_exponent() const { return r_; }
  double sigma_y() const { return sigma_y_; }
  double beta() const { return beta_; }

private:
  double eta_, r_, sigma_y_, beta_;
};

/// Negative control: NortonHoff with the hardening feedback sign flipped
/// (g_gamma = -eta rho^r kappa). The flipped sign destroys monotonicity
/// and every coercivity equality; certificate() reports the stable
/// variant's constants on purpose so validation runs flag it.
class SofteningCoupling final : public FlowRule {
public:
  SofteningCoupling(double eta, double r, double sigma_y, double kappa);

  std::string name() const override { return "softening_coupling"; }
  StateVec eval(const StateVec& dual) const override;
  double activation(const StateVec& dual) const override;
  bool has_potential() const override { return false; }
  GrowthCertificate certificate() const override;

private:
  NortonHoff base_;
};

struct MonotonicityReport {
  std::size_t samples = 0;
  std::size_t violations = 0;
  double worst_slack = 0.0; // most negative normalized pairing
  StateVec witness_a{}, witness_b{}; // pair attaining worst_slack
  bool passed() const { return violations == 0; }
};

struct GrowthReport {
  std::size_t samples = 0;
  std::size_t violations_joint = 0, violations_growth = 0, violations_coercive = 0;
  double worst_joint = 0.0, worst_growth = 0.0, worst_coercive = 0.0; // most negative margins
  bool passed() const {
    return violations_joint + violations_growth + violations_coercive == 0;
  }
};

struct PotentialReport {
  std::size_t samples = 0;
  std::size_t skipped = 0; // too close to the yield kink for finite differences
  double max_rel_error = 0.0;
};

struct SelfControlReport {
  bool applicable = false;
  double c1 = 0.0, c0 = 0.0;   // |B g| <= c1 |L g| + c0 (least-squares fit)
  double max_residual = 0.0;   // worst positive excess over the fit
  std::size_t samples = 0;
};

struct CompatibilityReport {
  double max_overstress = 0.0;
  std::size_t active_nodes = 0;
  bool compatible(double tol = 0.0) const { return max_overstress <= tol; }
};

/// Deterministic dual-state sampler mixing bulk scales from 1e-3 to 1e3
/// with states placed a hair's breadth around the yield surface.
std::vector<StateVec> sample_duals(std::size_t count, std::uint64_t seed, double sigma_y,
                                   double kappa);

/// (g(v1) - g(v2), v1 - v2) >= 0 over random pairs, a third of them
/// perturbations of size 1e-6 and 1e-2 so near-yield cancellation is
/// exercised; slack is normalized by |dg| |dv|.
MonotonicityReport check_monotonicity(const FlowRule& rule, std::size_t pairs,
                                      std::uint64_t seed, double sigma_y, double kappa);

/// Pointwise certificate check over sampled duals.
GrowthReport check_growth(const FlowRule& rule, const GrowthCertificate& cert,
                          std::size_t samples, std::uint64_t seed, double sigma_y,
                          double kappa);

/// Central-difference comparison of grad potential against eval; samples
/// with |rho - 0| below kink_margin are skipped.
PotentialReport check_potential_gradient(const FlowRule& rule, std::size_t samples,
                                         std::uint64_t seed, double sigma_y, double kappa,
                                         double step = 1e-5, double kink_margin = 1e-3);

/// Affine control of the plastic rate by the hardening rate,
/// |B g(v)| <= c1 |L g(v)| + c0; inapplicable when L g vanishes while
/// B g does not.
SelfControlReport check_self_controlling(const FlowRule& rule, const HardeningMap& hardening,
                                         std::size_t samples, std::uint64_t seed,
                                         double sigma_y, double kappa);

/// Largest nodal over-stress of a dual field; a compatible initial state
/// has none.
CompatibilityReport check_initial_compatibility(const FlowRule& rule, const StateField& dual);

} // namespace gradplast
