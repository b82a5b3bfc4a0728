#include <doctest.h>

#include <cmath>

#include "gradplast/flow_rule.hpp"
#include "support/helpers.hpp"

using namespace gradplast;

namespace {

StateVec make_dual(const Mat3& sigma_p, double sigma_gamma) {
  StateVec v{};
  for (int i = 0; i < 9; ++i) v[i] = sigma_p.a[i];
  v[9] = sigma_gamma;
  return v;
}

Mat3 shear01(double s) {
  Mat3 m = Mat3::zero();
  m(0, 1) = s;
  return m;
}

} // namespace

TEST_CASE("power-law rule reproduces hand values") {
  const NortonHoff rule(1.0, 1.0, 0.1, 0.5);

  // |dev| = 0.3, Sigma_gamma = -0.1: F = 0.3 - 0.05 - 0.1 = 0.15.
  const StateVec v = make_dual(shear01(0.3), -0.1);
  CHECK(rule.activation(v) == doctest::Approx(0.15).epsilon(1e-14));
  CHECK(rule.overstress(v) == doctest::Approx(0.15).epsilon(1e-14));
  const StateVec g = rule.eval(v);
  CHECK(g[1] == doctest::Approx(0.15).epsilon(1e-13)); // rho * (0,1)-direction
  CHECK(g[0] == 0.0);
  CHECK(g[3] == 0.0);
  CHECK(g[9] == doctest::Approx(0.075).epsilon(1e-13)); // rho * kappa
  CHECK(rule.potential(v) == doctest::Approx(0.01125).epsilon(1e-13)); // rho^2 / 2

  // Inactive state: everything vanishes, activation stays signed.
  const StateVec w = make_dual(shear01(0.05), 0.0);
  CHECK(rule.activation(w) == doctest::Approx(-0.05).epsilon(1e-14));
  CHECK(rule.overstress(w) == 0.0);
  const StateVec gw = rule.eval(w);
  for (int i = 0; i < kStateDim; ++i) CHECK(gw[i] == 0.0);
  CHECK(rule.potential(w) == 0.0);

  // Origin is elastic.
  const StateVec zero{};
  const StateVec gz = rule.eval(zero);
  for (int i = 0; i < kStateDim; ++i) CHECK(gz[i] == 0.0);

  CHECK_THROWS_AS(NortonHoff(0.0, 1.0, 0.1, 0.5), std::invalid_argument);
  CHECK_THROWS_AS(NortonHoff(1.0, 0.5, 0.1, 0.5), std::invalid_argument);
  CHECK_THROWS_AS(NortonHoff(1.0, 1.0, 0.0, 0.5), std::invalid_argument);
  CHECK_THROWS_AS(NortonHoff(1.0, 1.0, 0.1, -0.1), std::invalid_argument);
}

TEST_CASE("certificate constants for the default rule") {
  const NortonHoff rule(1.0, 1.0, 0.1, 0.5);
  const GrowthCertificate c = rule.certificate();
  // q = r + 1 = 2, conjugate 2, c2 = (1 + kappa^2)^(q*/2) = 1.25,
  // alpha = 1 / (1/2 + 1.25/2) = 8/9, alpha1 = 1.25^2.
  CHECK(c.q == doctest::Approx(2.0).epsilon(1e-15));
  CHECK(c.conjugate() == doctest::Approx(2.0).epsilon(1e-15));
  CHECK(c.alpha == doctest::Approx(8.0 / 9.0).epsilon(1e-14));
  CHECK(c.m == 0.0);
  CHECK(c.alpha1 == doctest::Approx(1.5625).epsilon(1e-14));
  CHECK(c.m1 == 0.0);
  CHECK(c.alpha2 == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(c.m2 == 0.0);

  // eta = 2, r = 2, kappa = 0: q = 3, q* = 1.5,
  // c2 = 2^1.5, alpha = 2 / (1/3 + 2^1.5/1.5), alpha1 = 2^1.5.
  const NortonHoff rule2(2.0, 2.0, 0.1, 0.0);
  const GrowthCertificate c2 = rule2.certificate();
  CHECK(c2.q == doctest::Approx(3.0).epsilon(1e-15));
  CHECK(c2.conjugate() == doctest::Approx(1.5).epsilon(1e-15));
  const double pow2_15 = 2.8284271247461903;
  CHECK(c2.alpha == doctest::Approx(2.0 / (1.0 / 3.0 + pow2_15 / 1.5)).epsilon(1e-14));
  CHECK(c2.alpha1 == doctest::Approx(pow2_15).epsilon(1e-14));
  CHECK(c2.alpha2 == doctest::Approx(2.0).epsilon(1e-15));
}

TEST_CASE("non-associative rule: values, potential, certificate") {
  const NonAssociative na(1.0, 1.0, 0.1, 0.0);
  // |dev| = 0.3: rho = 0.2, g_p = rho * dev (unnormalized), g_gamma = 0.
  const StateVec v = make_dual(shear01(0.3), -5.0); // gamma slot must be ignored
  CHECK(na.activation(v) == doctest::Approx(0.2).epsilon(1e-13));
  const StateVec g = na.eval(v);
  CHECK(g[1] == doctest::Approx(0.2 * 0.3).epsilon(1e-13));
  CHECK(g[9] == 0.0);
  // Potential: rho^3/3 + sigma_y rho^2/2 = 0.008/3 + 0.1*0.04/2.
  CHECK(na.has_potential());
  CHECK(na.potential(v) == doctest::Approx(0.008 / 3.0 + 0.002).epsilon(1e-12));

  const GrowthCertificate c = na.certificate();
  CHECK(c.q == doctest::Approx(3.0).epsilon(1e-15));
  // common = 2^(q*-1) = 2^0.5; A = common (1 + sigma_y^1.5); B = common sigma_y^1.5.
  const double root2 = 1.4142135623730951;
  const double sy15 = 0.031622776601683791; // 0.1^1.5
  const double a_coef = root2 * (1.0 + sy15);
  const double b_coef = root2 * sy15;
  CHECK(c.alpha == doctest::Approx(1.0 / (1.0 / 3.0 + a_coef / 1.5)).epsilon(1e-13));
  CHECK(c.m == doctest::Approx(c.alpha * b_coef / 1.5).epsilon(1e-13));
  CHECK(c.alpha1 == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(c.m1 == 0.0);
  CHECK(c.alpha2 == doctest::Approx(1.0).epsilon(1e-15));

  // Skewed variant: direction picks up the skew block, no certificate.
  const NonAssociative nb(1.0, 1.0, 0.1, 0.7);
  Mat3 p = shear01(0.3); // dev = sym part 0.15 each + skew 0.15
  const StateVec vb = make_dual(p, 0.0);
  const double rho = norm(dev(p)) - 0.1;
  const StateVec gb = nb.eval(vb);
  const Mat3 expect = rho * (dev(p) + 0.7 * skew(p));
  for (int i = 0; i < 9; ++i) CHECK(gb[i] == doctest::Approx(expect.a[i]).epsilon(1e-12));
  CHECK(!nb.has_potential());
  CHECK_THROWS_AS(nb.potential(vb), std::logic_error);
  CHECK_THROWS_AS(nb.certificate(), std::logic_error);
}

TEST_CASE("potential gradient matches the rate map") {
  const NortonHoff nh(1.0, 1.0, 0.1, 0.5);
  const PotentialReport r1 = check_potential_gradient(nh, 400, 77, 0.1, 0.5);
  CHECK(r1.samples > 200);
  CHECK(r1.max_rel_error <= 1e-6);

  const NortonHoff nh2(0.7, 2.0, 0.2, 0.3);
  const PotentialReport r2 = check_potential_gradient(nh2, 400, 78, 0.2, 0.3);
  CHECK(r2.samples > 200);
  CHECK(r2.max_rel_error <= 1e-6);

  const NonAssociative na(1.3, 1.5, 0.15, 0.0);
  const PotentialReport r3 = check_potential_gradient(na, 400, 79, 0.15, 0.0);
  CHECK(r3.samples > 200);
  CHECK(r3.max_rel_error <= 1e-6);
}

TEST_CASE("monotone rules pass, destabilized variants fail") {
  const NortonHoff nh(1.0, 1.0, 0.1, 0.5);
  const MonotonicityReport m1 = check_monotonicity(nh, 10000, 4242, 0.1, 0.5);
  CHECK(m1.samples == 10000);
  CHECK(m1.violations == 0);
  CHECK(m1.worst_slack >= -1e-12);

  const NonAssociative na(1.0, 1.0, 0.1, 0.0);
  const MonotonicityReport m2 = check_monotonicity(na, 10000, 4243, 0.1, 0.0);
  CHECK(m2.violations == 0);

  // Flipped hardening feedback: explicit descent pair plus sampling.
  const SofteningCoupling soft(1.0, 1.0, 0.1, 0.5);
  const StateVec v1 = make_dual(shear01(0.15), 0.0); // active: F = 0.05
  StateVec v2 = v1;
  v2[9] += 1e-3;
  StateVec dg{}, dv{};
  const StateVec g1 = soft.eval(v1), g2 = soft.eval(v2);
  for (int i = 0; i < kStateDim; ++i) {
    dg[i] = g1[i] - g2[i];
    dv[i] = v1[i] - v2[i];
  }
  CHECK(state_dot(dg, dv) < 0.0);
  const MonotonicityReport m3 = check_monotonicity(soft, 10000, 4244, 0.1, 0.5);
  CHECK(m3.violations > 0);
  CHECK(m3.worst_slack < -1e-6);

  // Skew drift: indefinite Jacobian just past the yield surface. With
  // x = (R/sqrt2)(n + S), R = sigma_y + 1e-3, the second-order pairing
  // form along w = -1.5 n + S evaluates to about -0.0084 < 0.
  const NonAssociative nb(1.0, 1.0, 0.1, 1.0);
  const double root2 = 1.4142135623730951;
  Mat3 n = Mat3::zero();
  n(0, 1) = n(1, 0) = 1.0 / root2;
  Mat3 shat = Mat3::zero();
  shat(0, 1) = 1.0 / root2;
  shat(1, 0) = -1.0 / root2;
  const double radius = 0.1 + 1e-3;
  const Mat3 base = (radius / root2) * (n + shat);
  const Mat3 dir = -1.5 * n + shat;
  bool descent = false;
  for (const double eps : {1e-3, 1e-4, 1e-5}) {
    const Mat3 pert = base + eps * dir;
    const StateVec a = make_dual(base, 0.0), b = make_dual(pert, 0.0);
    const StateVec ga = nb.eval(a), gb2 = nb.eval(b);
    double s = 0.0;
    for (int i = 0; i < kStateDim; ++i) s += (ga[i] - gb2[i]) * (a[i] - b[i]);
    if (s < 0.0) descent = true;
  }
  CHECK(descent);
}

TEST_CASE("growth certificates verify cleanly and tampering is caught") {
  const NortonHoff nh(1.0, 1.0, 0.1, 0.5);
  const GrowthCertificate cert = nh.certificate();
  const GrowthReport ok = check_growth(nh, cert, 20000, 555, 0.1, 0.5);
  CHECK(ok.samples == 20000);
  CHECK(ok.passed());
  CHECK(ok.worst_joint >= -1e-10);
  CHECK(ok.worst_growth >= -1e-10);
  CHECK(ok.worst_coercive >= -1e-10);

  const NonAssociative na(1.0, 1.0, 0.1, 0.0);
  const GrowthReport ok2 = check_growth(na, na.certificate(), 20000, 556, 0.1, 0.0);
  CHECK(ok2.passed());

  GrowthCertificate bad = cert;
  bad.alpha2 *= 1.5;
  const GrowthReport r1 = check_growth(nh, bad, 20000, 557, 0.1, 0.5);
  CHECK(r1.violations_coercive > 0);

  GrowthCertificate bad2 = cert;
  bad2.alpha *= 1.5;
  const GrowthReport r2 = check_growth(nh, bad2, 20000, 558, 0.1, 0.5);
  CHECK(r2.violations_joint > 0);

  // The destabilized coupling cannot carry the stable certificate.
  const SofteningCoupling soft(1.0, 1.0, 0.1, 0.5);
  const GrowthReport r3 = check_growth(soft, soft.certificate(), 20000, 559, 0.1, 0.5);
  CHECK(!r3.passed());
  CHECK(r3.violations_coercive > 0);
}

TEST_CASE("plastic rate is controlled by the hardening rate") {
  const NortonHoff nh(1.0, 1.0, 0.1, 0.5);
  const HardeningMap iso = HardeningMap::isotropic(0.1);
  const SelfControlReport r = check_self_controlling(nh, iso, 4000, 31, 0.1, 0.5);
  CHECK(r.applicable);
  CHECK(r.samples > 1000);
  // |B g| = eta rho^r, |L g| = k kappa eta rho^r: exact line with slope
  // 1 / (k kappa) = 20 through the origin.
  CHECK(r.c1 == doctest::Approx(20.0).epsilon(1e-9));
  CHECK(std::abs(r.c0) <= 1e-7);
  CHECK(r.max_residual <= 1e-7);

  // Without gamma coupling the hardening rate is blind to the plastic rate.
  const NonAssociative na(1.0, 1.0, 0.1, 0.0);
  const SelfControlReport r2 = check_self_controlling(na, iso, 4000, 32, 0.1, 0.0);
  CHECK(!r2.applicable);

  const NortonHoff nh0(1.0, 1.0, 0.1, 0.0);
  const SelfControlReport r3 = check_self_controlling(nh0, iso, 4000, 33, 0.1, 0.0);
  CHECK(!r3.applicable);

  const HardeningMap none = HardeningMap::isotropic(0.0);
  const SelfControlReport r4 = check_self_controlling(nh, none, 4000, 34, 0.1, 0.5);
  CHECK(!r4.applicable);
}

TEST_CASE("field wrappers and compatibility scan") {
  const Grid g = Grid::box(4, 3, 3, 1.0, 1.0, 1.0);
  const NortonHoff rule(1.0, 1.0, 0.1, 0.5);
  Rng rng(88);
  StateField dual(g);
  for (std::size_t i = 0; i < dual.size(); ++i) dual[i] = 0.2 * rng.gaussian();

  const StateField rate = rule.eval_field(dual);
  const ScalarField rho = rule.overstress_field(dual);
  double pot = 0.0;
  for (std::size_t n = 0; n < g.node_count(); ++n) {
    const StateVec v = get_state(dual, n);
    const StateVec gv = rule.eval(v);
    for (int i = 0; i < kStateDim; ++i) CHECK(rate(n, i) == gv[i]);
    CHECK(rho(n, 0) == rule.overstress(v));
    pot += g.weight(n) * rule.potential(v);
  }
  CHECK(rule.potential_integral(g, dual) == doctest::Approx(pot).epsilon(1e-14));

  StateField calm(g); // zero state is strictly elastic
  const CompatibilityReport c0 = check_initial_compatibility(rule, calm);
  CHECK(c0.compatible());
  CHECK(c0.active_nodes == 0);

  StateField hot = calm;
  const Mat3 s = shear01(0.3);
  for (int i = 0; i < 9; ++i) hot(5, i) = s.a[i];
  const CompatibilityReport c1 = check_initial_compatibility(rule, hot);
  CHECK(c1.active_nodes == 1);
  CHECK(c1.max_overstress == doctest::Approx(0.2).epsilon(1e-13));
  CHECK(!c1.compatible(1e-6));

  const SofteningCoupling soft(1.0, 1.0, 0.1, 0.5);
  CHECK(!soft.has_potential());
  CHECK_THROWS_AS(soft.potential(get_state(dual, 0)), std::logic_error);
  CHECK_THROWS_AS(SofteningCoupling(1.0, 1.0, 0.1, 0.0), std::invalid_argument);
}

TEST_CASE("dual sampler is deterministic") {
  const auto a = sample_duals(50, 123, 0.1, 0.5);
  const auto b = sample_duals(50, 123, 0.1, 0.5);
  const auto c = sample_duals(50, 124, 0.1, 0.5);
  REQUIRE(a.size() == 50);
  bool all_equal = true, any_differs = false;
  for (std::size_t i = 0; i < a.size(); ++i)
    for (int j = 0; j < kStateDim; ++j) {
      all_equal = all_equal && a[i][j] == b[i][j];
      any_differs = any_differs || a[i][j] != c[i][j];
    }
  CHECK(all_equal);
  CHECK(any_differs);
}
