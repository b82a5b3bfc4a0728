#include "gradplast/flow_rule.hpp"

#include <cmath>

#include "gradplast/rng.hpp"

namespace gradplast {

double FlowRule::potential(const StateVec&) const {
  throw std::logic_error(name() + ": no potential available");
}

StateField FlowRule::eval_field(const StateField& dual) const {
  StateField out(dual.nodes());
  for (std::size_t n = 0; n < dual.nodes(); ++n) set_state(out, n, eval(get_state(dual, n)));
  return out;
}

ScalarField FlowRule::overstress_field(const StateField& dual) const {
  ScalarField out(dual.nodes());
  for (std::size_t n = 0; n < dual.nodes(); ++n) out(n, 0) = overstress(get_state(dual, n));
  return out;
}

double FlowRule::potential_integral(const Grid& g, const StateField& dual) const {
  if (dual.nodes() != g.node_count())
    throw std::invalid_argument("potential_integral: field size mismatch");
  double s = 0.0;
  for (std::size_t n = 0; n < g.node_count(); ++n)
    s += g.weight(n) * potential(get_state(dual, n));
  return s;
}

NortonHoff::NortonHoff(double eta, double r, double sigma_y, double kappa)
    : eta_(eta), r_(r), sigma_y_(sigma_y), kappa_(kappa) {
  if (!(eta > 0.0)) throw std::invalid_argument("NortonHoff: eta must be > 0");
  if (!(r >= 1.0)) throw std::invalid_argument("NortonHoff: rate exponent must be >= 1");
  if (!(sigma_y > 0.0)) throw std::invalid_argument("NortonHoff: sigma_y must be > 0");
  if (!(kappa >= 0.0)) throw std::invalid_argument("NortonHoff: kappa must be >= 0");
}

double NortonHoff::activation(const StateVec& v) const {
  return norm(dev(dual_p(v))) + kappa_ * dual_gamma(v) - sigma_y_;
}

StateVec NortonHoff::eval(const StateVec& v) const {
  StateVec g{};
  const double rho = overstress(v);
  if (rho == 0.0) return g;
  const double a = eta_ * std::pow(rho, r_);
  const Mat3 d = dev(dual_p(v));
  const double dn = norm(d);
  if (dn > 0.0)
    for (int i = 0; i < 9; ++i) g[i] = a * d.a[i] / dn;
  g[9] = a * kappa_;
  return g;
}

double NortonHoff::potential(const StateVec& v) const {
  const double rho = overstress(v);
  return eta_ / (r_ + 1.0) * std::pow(rho, r_ + 1.0);
}

GrowthCertificate NortonHoff::certificate() const {
  GrowthCertificate c;
  c.q = r_ + 1.0;
  const double qs = c.conjugate();
  const double c2 = std::pow(eta_, qs) * std::pow(1.0 + kappa_ * kappa_, qs / 2.0);
  c.alpha = eta_ / (1.0 / c.q + c2 / qs);
  c.m = 0.0;
  c.alpha1 = std::pow(eta_, qs) * std::pow(1.0 + kappa_ * kappa_, (qs + c.q) / 2.0);
  c.m1 = 0.0;
  c.alpha2 = eta_;
  c.m2 = 0.0;
  return c;
}

NonAssociative::NonAssociative(double eta, double r, double sigma_y, double beta)
    : eta_(eta), r_(r), sigma_y_(sigma_y), beta_(beta) {
  if (!(eta > 0.0)) throw std::invalid_argument("NonAssociative: eta must be > 0");
  if (!(r >= 1.0)) throw std::invalid_argument("NonAssociative: rate exponent must be >= 1");
  if (!(sigma_y > 0.0)) throw std::invalid_argument("NonAssociative: sigma_y must be > 0");
  if (!std::isfinite(beta)) throw std::invalid_argument("NonAssociative: beta must be finite");
}

double NonAssociative::activation(const StateVec& v) const {
  return norm(dev(dual_p(v))) - sigma_y_;
}

StateVec NonAssociative::eval(const StateVec& v) const {
  StateVec g{};
  const double rho = overstress(v);
  if (rho == 0.0) return g;
  const double a = eta_ * std::pow(rho, r_);
  const Mat3 p = dual_p(v);
  const Mat3 dir = dev(p) + beta_ * skew(p);
  for (int i = 0; i < 9; ++i) g[i] = a * dir.a[i];
  return g;
}

double NonAssociative::potential(const StateVec& v) const {
  if (beta_ != 0.0) return FlowRule::potential(v);
  const double rho = overstress(v);
  if (rho == 0.0) return 0.0;
  return eta_ * (std::pow(rho, r_ + 2.0) / (r_ + 2.0) +
                 sigma_y_ * std::pow(rho, r_ + 1.0) / (r_ + 1.0));
}

GrowthCertificate NonAssociative::certificate() const {
  if (beta_ != 0.0)
    throw std::logic_error("non_associative: no growth certificate for beta != 0");
  GrowthCertificate c;
  c.q = r_ + 2.0;
  const double qs = c.conjugate();
  const double common = std::pow(eta_, qs) * std::pow(2.0, qs - 1.0);
  const double a_coef = common * (1.0 + std::pow(sigma_y_, qs));
  const double b_coef = common * std::pow(sigma_y_, qs);
  c.alpha = eta_ / (1.0 / c.q + a_coef / qs);
  c.m = c.alpha * b_coef / qs;
  c.alpha1 = std::pow(eta_, qs);
  c.m1 = 0.0;
  c.alpha2 = eta_;
  c.m2 = 0.0;
  return c;
}

SofteningCoupling::SofteningCoupling(double eta, double r, double sigma_y, double kappa)
    : base_(eta, r, sigma_y, kappa) {
  if (!(kappa > 0.0))
    throw std::invalid_argument("SofteningCoupling: kappa must be > 0 to matter");
}

double SofteningCoupling::activation(const StateVec& v) const { return base_.activation(v); }

StateVec SofteningCoupling::eval(const StateVec& v) const {
  StateVec g = base_.eval(v);
  g[9] = -g[9];
  return g;
}

GrowthCertificate SofteningCoupling::certificate() const { return base_.certificate(); }

namespace {

StateVec gaussian_state(Rng& rng, double amp) {
  StateVec v;
  for (int i = 0; i < kStateDim; ++i) v[i] = amp * rng.gaussian();
  return v;
}

// Rescale the deviatoric part of the p-block so that |dev| hits target.
void set_dev_magnitude(StateVec& v, double target, Rng& rng) {
  Mat3 p = dual_p(v);
  Mat3 d = dev(p);
  double dn = norm(d);
  if (dn < 1e-12) {
    d = Mat3::zero();
    d(0, 1) = 1.0 / std::sqrt(2.0);
    d(1, 0) = rng.uniform() < 0.5 ? 1.0 / std::sqrt(2.0) : -1.0 / std::sqrt(2.0);
    dn = norm(d);
  }
  const double tr3 = trace(p) / 3.0;
  Mat3 scaled = (target / dn) * d;
  scaled(0, 0) += tr3;
  scaled(1, 1) += tr3;
  scaled(2, 2) += tr3;
  for (int i = 0; i < 9; ++i) v[i] = scaled.a[i];
}

} // namespace

std::vector<StateVec> sample_duals(std::size_t count, std::uint64_t seed, double sigma_y,
                                   double kappa) {
  Rng rng(seed);
  static constexpr double scales[] = {1e-3, 1e-2, 1e-1, 1.0, 1e1, 1e2, 1e3};
  std::vector<StateVec> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    switch (i % 5) {
    case 0: { // bulk scales
      out.push_back(gaussian_state(rng, sigma_y * scales[(i / 5) % 7]));
      break;
    }
    case 1: { // just past yield
      StateVec v = gaussian_state(rng, 0.3 * sigma_y);
      const double margin = sigma_y - kappa * v[9];
      const double u = rng.uniform(1e-6, 0.05) * sigma_y;
      set_dev_magnitude(v, std::max(margin, 0.0) + u, rng);
      out.push_back(v);
      break;
    }
    case 2: { // just inside the elastic region
      StateVec v = gaussian_state(rng, 0.3 * sigma_y);
      const double margin = sigma_y - kappa * v[9];
      const double u = rng.uniform(1e-6, 0.05) * sigma_y;
      set_dev_magnitude(v, std::max(margin - u, 0.0), rng);
      out.push_back(v);
      break;
    }
    case 3: { // near the origin
      out.push_back(gaussian_state(rng, 1e-4 * sigma_y));
      break;
    }
    default: { // hardening-dominant states, both signs
      StateVec v = gaussian_state(rng, 0.1 * sigma_y);
      v[9] = rng.gaussian() * 10.0 * sigma_y / std::max(kappa, 0.1);
      out.push_back(v);
      break;
    }
    }
  }
  return out;
}

MonotonicityReport check_monotonicity(const FlowRule& rule, std::size_t pairs,
                                      std::uint64_t seed, double sigma_y, double kappa) {
  MonotonicityReport rep;
  const std::vector<StateVec> vs = sample_duals(pairs, seed, sigma_y, kappa);
  Rng rng(seed ^ 0x9e3779b97f4a7c15ull);
  for (std::size_t i = 0; i < pairs; ++i) {
    const StateVec& v1 = vs[i];
    StateVec v2;
    if (i % 3 == 0) {
      v2 = vs[(i * 7 + 3) % pairs];
    } else {
      const double amp = i % 3 == 1 ? 1e-6 : 1e-2;
      v2 = v1;
      for (int cpt = 0; cpt < kStateDim; ++cpt) v2[cpt] += amp * sigma_y * rng.gaussian();
    }
    const StateVec g1 = rule.eval(v1), g2 = rule.eval(v2);
    StateVec dg, dv;
    for (int cpt = 0; cpt < kStateDim; ++cpt) {
      dg[cpt] = g1[cpt] - g2[cpt];
      dv[cpt] = v1[cpt] - v2[cpt];
    }
    const double s = state_dot(dg, dv);
    const double den = state_norm(dg) * state_norm(dv);
    ++rep.samples;
    if (den > 0.0) {
      const double slack = s / den;
      if (slack < rep.worst_slack) {
        rep.worst_slack = slack;
        rep.witness_a = v1;
        rep.witness_b = v2;
      }
      if (s < -1e-12 * den) ++rep.violations;
    }
  }
  return rep;
}

GrowthReport check_growth(const FlowRule& rule, const GrowthCertificate& cert,
                          std::size_t samples, std::uint64_t seed, double sigma_y,
                          double kappa) {
  GrowthReport rep;
  const double q = cert.q, qs = cert.conjugate();
  for (const StateVec& v : sample_duals(samples, seed, sigma_y, kappa)) {
    const StateVec g = rule.eval(v);
    const double rho = rule.overstress(v);
    const double pair = state_dot(g, v);
    const double gn = state_norm(g);
    ++rep.samples;

    const double joint_lhs = cert.alpha * (std::pow(rho, q) / q + std::pow(gn, qs) / qs);
    const double joint_rhs = pair + cert.m;
    const double mj = (joint_rhs - joint_lhs) / (1.0 + std::abs(joint_lhs) + std::abs(joint_rhs));
    rep.worst_joint = std::min(rep.worst_joint, mj);
    if (mj < -1e-10) ++rep.violations_joint;

    const double growth_lhs = std::pow(gn, qs);
    const double growth_rhs = cert.m1 + cert.alpha1 * std::pow(state_norm(v), q);
    const double mg =
        (growth_rhs - growth_lhs) / (1.0 + std::abs(growth_lhs) + std::abs(growth_rhs));
    rep.worst_growth = std::min(rep.worst_growth, mg);
    if (mg < -1e-10) ++rep.violations_growth;

    const double co_lhs = cert.alpha2 * std::pow(rho, q);
    const double co_rhs = pair + cert.m2;
    const double mc = (co_rhs - co_lhs) / (1.0 + std::abs(co_lhs) + std::abs(co_rhs));
    rep.worst_coercive = std::min(rep.worst_coercive, mc);
    if (mc < -1e-10) ++rep.violations_coercive;
  }
  return rep;
}

PotentialReport check_potential_gradient(const FlowRule& rule, std::size_t samples,
                                         std::uint64_t seed, double sigma_y, double kappa,
                                         double step, double kink_margin) {
  PotentialReport rep;
  for (const StateVec& v : sample_duals(samples, seed, sigma_y, kappa)) {
    if (std::abs(rule.activation(v)) < kink_margin) {
      ++rep.skipped;
      continue;
    }
    const StateVec g = rule.eval(v);
    const double gn = state_norm(g);
    ++rep.samples;
    for (int cpt = 0; cpt < kStateDim; ++cpt) {
      StateVec vp = v, vm = v;
      vp[cpt] += step;
      vm[cpt] -= step;
      const double fd = (rule.potential(vp) - rule.potential(vm)) / (2.0 * step);
      const double err = std::abs(fd - g[cpt]) / (1.0 + gn);
      rep.max_rel_error = std::max(rep.max_rel_error, err);
    }
  }
  return rep;
}

SelfControlReport check_self_controlling(const FlowRule& rule, const HardeningMap& hardening,
                                         std::size_t samples, std::uint64_t seed,
                                         double sigma_y, double kappa) {
  SelfControlReport rep;
  std::vector<double> xs, ys;
  for (const StateVec& v : sample_duals(samples, seed, sigma_y, kappa)) {
    const StateVec g = rule.eval(v);
    double pn = 0.0;
    for (int i = 0; i < 9; ++i) pn += g[i] * g[i];
    const double y = std::sqrt(pn);
    const double x = state_norm(hardening.apply_one(g));
    if (y == 0.0 && x == 0.0) continue;
    xs.push_back(x);
    ys.push_back(y);
  }
  rep.samples = xs.size();
  if (xs.empty()) {
    rep.applicable = true; // vacuously: the rate never activates
    return rep;
  }
  double max_x = 0.0, max_y = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    max_x = std::max(max_x, xs[i]);
    max_y = std::max(max_y, ys[i]);
  }
  if (max_x <= 1e-14 * std::max(1.0, max_y)) {
    rep.applicable = false; // hardening rate cannot see the plastic rate
    return rep;
  }
  rep.applicable = true;
  // Least-squares affine fit y ~ c1 x + c0.
  const double n = static_cast<double>(xs.size());
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sx += xs[i];
    sy += ys[i];
    sxx += xs[i] * xs[i];
    sxy += xs[i] * ys[i];
  }
  const double det = n * sxx - sx * sx;
  if (det > 1e-30 * (1.0 + n * sxx)) {
    rep.c1 = (n * sxy - sx * sy) / det;
    rep.c0 = (sy * sxx - sx * sxy) / det;
  } else { // all x equal: pure offset fit
    rep.c1 = 0.0;
    rep.c0 = sy / n;
  }
  for (std::size_t i = 0; i < xs.size(); ++i)
    rep.max_residual = std::max(rep.max_residual, ys[i] - (rep.c1 * xs[i] + rep.c0));
  return rep;
}

CompatibilityReport check_initial_compatibility(const FlowRule& rule, const StateField& dual) {
  CompatibilityReport rep;
  for (std::size_t n = 0; n < dual.nodes(); ++n) {
    const double rho = rule.overstress(get_state(dual, n));
    rep.max_overstress = std::max(rep.max_overstress, rho);
    if (rho > 0.0) ++rep.active_nodes;
  }
  return rep;
}

} // namespace gradplast
