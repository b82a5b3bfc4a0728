#include <doctest.h>

#include <cmath>
#include <limits>

#include "gradplast/curl.hpp"
#include "gradplast/diagnostics.hpp"
#include "gradplast/elasticity.hpp"
#include "gradplast/fields.hpp"
#include "gradplast/flow_rule.hpp"
#include "gradplast/grid.hpp"
#include "gradplast/rng.hpp"
#include "gradplast/rothe.hpp"
#include "support/helpers.hpp"

using namespace gradplast;
using gptest::random_vector_field;

namespace {

double max_dev_p(const StateField& s) {
  double m = 0.0;
  const MatrixField p = state_p_block(s);
  for (std::size_t n = 0; n < p.nodes(); ++n) m = std::max(m, norm(dev(get_mat(p, n))));
  return m;
}

// Ramp load calibrated so the trial stress reaches `target` times sigma_y
// at t = T.
RotheScheme::LoadFn calibrated_ramp(RotheScheme& scheme, const VectorField& b1, double sigma_y,
                                    double target, double total_time) {
  scheme.sigma_lin().set_load(b1);
  const double peak = max_dev_p(scheme.sigma_lin().ell());
  const double s = target * sigma_y / (peak * total_time);
  return [b1, s](double t) {
    VectorField b = b1;
    b *= s * t;
    return b;
  };
}

}  // namespace

TEST_CASE("zero scenario produces a trivial ledger") {
  Grid g = Grid::box(4, 4, 4, 1.0, 1.0, 1.0);
  ElasticTensor c(g, 1.0, 1.0);
  ElasticSystem sys(g, c);
  CurlOperator curl(g);
  HardeningMap hard = HardeningMap::isotropic(0.1);
  NortonHoff rule(1.0, 1.0, 0.1, 0.5);

  EnergyLedger led(sys, curl, hard, rule, 0.1, 1e-6);
  RotheScheme scheme(sys, curl, hard, rule, 0.1, 1e-6);
  auto zero_load = [&](double) { return VectorField(g); };
  Trajectory tr = scheme.run(zero_load, StateField(g), 1.0, 4, true,
                             [&](const StepView& v) { return led.push(v); });

  REQUIRE(led.rows().size() == 5);
  CHECK(led.passed());
  const GrowthCertificate cert = rule.certificate();
  for (const LedgerRow& r : led.rows()) {
    CHECK(r.elastic == 0.0);
    CHECK(r.hardening == 0.0);
    CHECK(r.regularization == 0.0);
    CHECK(r.curl == 0.0);
    CHECK(r.cum_sigma_lq == 0.0);
    CHECK(r.cum_rate_lq == 0.0);
    CHECK(r.load_work == 0.0);
    CHECK(r.step_dissipation == 0.0);
    CHECK(r.min_pointwise == 0.0);
    CHECK(r.lhs51 == 0.0);
    const double want_rhs = r.time * cert.m * g.volume();
    CHECK(r.rhs51 == doctest::Approx(want_rhs).epsilon(1e-15));
    CHECK(r.slack51 >= 0.0);
    CHECK(r.lhs78 == 0.0);
    CHECK(r.rhs78 == 0.0);
    CHECK(r.potential == 0.0);
    CHECK(r.slack69 == 0.0);
  }
  CHECK(led.tol_energy() == doctest::Approx(1e-8).epsilon(1e-12));

  DissipationReport rep = dissipation_check(sys, curl, hard, rule, 0.1, 1e-6, tr, 1e-10);
  CHECK(rep.passed());
  CHECK(rep.min_step == 0.0);
  CHECK(rep.min_pointwise == 0.0);
}

TEST_CASE("sub-yield ramp reduces to the elastic budget") {
  Grid g = Grid::box(4, 4, 5, 1.0, 1.1, 1.0);
  ElasticTensor c(g, 1.0, 1.0);
  ElasticSystem sys(g, c);
  CurlOperator curl(g);
  HardeningMap hard = HardeningMap::isotropic(0.1);
  NortonHoff rule(1.0, 1.0, 0.1, 0.5);
  RotheScheme scheme(sys, curl, hard, rule, 0.1, 1e-6);

  Rng rng(5);
  VectorField b1 = random_vector_field(g, rng, 1.0);
  const double T = 1.0;
  auto load = calibrated_ramp(scheme, b1, rule.sigma_y(), 0.6, T);

  EnergyLedger led(sys, curl, hard, rule, 0.1, 1e-6);
  Trajectory tr = scheme.run(load, StateField(g), T, 5, true,
                             [&](const StepView& v) { return led.push(v); });

  CHECK(led.passed());
  for (std::size_t n = 0; n < tr.states.size(); ++n) {
    CHECK(sup_norm(tr.states[n]) == 0.0);
    const LedgerRow& r = led.rows()[n];
    CHECK(r.elastic <= 1e-18);  // residual-level mismatch of two solves
    CHECK(r.hardening == 0.0);
    CHECK(r.load_work == 0.0);
    CHECK(r.step_dissipation == 0.0);
    CHECK(r.cum_rate_lq == 0.0);
    CHECK(r.min_pointwise == 0.0);
  }

  // Free-energy imbalance against the direct elastic oracle
  // Psi_n - Psi_{n-1} - (sigma_n, de) = -1/2 (C de, de).
  DissipationReport rep = dissipation_check(sys, curl, hard, rule, 0.1, 1e-6, tr, 1e-9);
  CHECK(rep.passed());
  double want = -std::numeric_limits<double>::infinity();
  MatrixField e_prev = sym_field(sys.gradient(tr.u[0]));
  for (std::size_t n = 1; n < tr.u.size(); ++n) {
    MatrixField e_n = sym_field(sys.gradient(tr.u[n]));
    MatrixField de = e_n;
    de -= e_prev;
    double quad = 0.0;
    for (std::size_t node = 0; node < g.node_count(); ++node)
      quad += g.weight(node) * ddot(get_mat(de, node), c.apply(node, get_mat(de, node)));
    want = std::max(want, -0.5 * quad);
    e_prev = e_n;
  }
  CHECK(rep.max_imbalance == doctest::Approx(want).epsilon(1e-10));
  CHECK(rep.max_imbalance <= 0.0);
}

TEST_CASE("manufactured step matches closed-form dissipation and norms") {
  Grid g = Grid::box(3, 3, 3, 1.0, 1.0, 1.0);
  ElasticTensor c(g, 1.0, 1.0);
  ElasticSystem sys(g, c);
  CurlOperator curl(g);
  HardeningMap hard = HardeningMap::isotropic(0.1);
  const double eta = 2.0, r_exp = 1.5, sigma_y = 0.1;
  NortonHoff rule(eta, r_exp, sigma_y, 0.0);

  const std::size_t node = g.index(1, 1, 1);
  const double w = g.weight(node);
  const double s = 0.35, rho = s - sigma_y, h = 0.02;
  const double rate = eta * std::pow(rho, r_exp);
  Mat3 dir{};
  dir(0, 0) = 1.0 / std::sqrt(2.0);
  dir(1, 1) = -1.0 / std::sqrt(2.0);

  StateField slin(g);
  StateField z(g);
  for (int i = 0; i < 9; ++i) {
    slin(node, i) = s * dir.a[i];
    z(node, i) = h * rate * dir.a[i];
  }

  EnergyLedger led(sys, curl, hard, rule, 0.0, 0.0);
  MatrixField zero_m(g);
  StateField zero_z(g);
  led.push(0, 0.0, 0.0, zero_z, zero_z, StateField(g), zero_m, zero_m);
  led.push(1, h, h, zero_z, z, slin, zero_m, zero_m);

  const LedgerRow& row = led.rows()[1];
  CHECK(row.step_dissipation == doctest::Approx(w * h * rate * s).epsilon(1e-14));
  CHECK(row.cum_dissipation == row.step_dissipation);
  CHECK(row.min_pointwise == 0.0);  // inactive nodes contribute g . Sigma = 0

  const GrowthCertificate cert = rule.certificate();
  const double q = cert.q, qs = cert.conjugate();
  CHECK(q == doctest::Approx(r_exp + 1.0));
  CHECK(row.cum_sigma_lq == doctest::Approx(h * w * std::pow(s, q)).epsilon(1e-14));
  CHECK(row.cum_rate_lq == doctest::Approx(h * w * std::pow(rate, qs)).epsilon(1e-14));

  SUBCASE("out-of-order rows are rejected") {
    EnergyLedger bad(sys, curl, hard, rule, 0.0, 0.0);
    CHECK_THROWS_AS(bad.push(1, h, h, zero_z, z, slin, zero_m, zero_m),
                    std::invalid_argument);
  }
}

TEST_CASE("plastic ledger passes and replay matches the live feed") {
  Grid g = Grid::box(5, 5, 5, 1.0, 1.0, 1.0);
  ElasticTensor c(g, 1.0, 1.0);
  ElasticSystem sys(g, c);
  CurlOperator curl(g);
  HardeningMap hard = HardeningMap::isotropic(0.1);
  NortonHoff rule(1.0, 1.0, 0.1, 0.5);
  const double c1 = 0.1, eps = 1e-6;
  RotheScheme scheme(sys, curl, hard, rule, c1, eps);

  Rng rng(9);
  VectorField b1 = random_vector_field(g, rng, 1.0);
  const double T = 0.5;
  auto load = calibrated_ramp(scheme, b1, rule.sigma_y(), 3.0, T);

  EnergyLedger live(sys, curl, hard, rule, c1, eps);
  Trajectory tr = scheme.run(load, StateField(g), T, 12, true,
                             [&](const StepView& v) { return live.push(v); });
  REQUIRE(sup_norm(tr.states.back()) > 0.0);  // the run actually yields

  CHECK(live.passed());
  CHECK(live.has_certificate());
  CHECK(live.has_potential());
  double prev_cum = 0.0;
  double max_defect = 0.0;
  for (const LedgerRow& r : live.rows()) {
    CHECK(r.slack51 >= -live.tol_energy());
    CHECK(r.slack56 >= -live.tol_energy());
    CHECK(r.slack69 >= -live.tol_energy());
    CHECK(r.slack78 >= -live.tol_energy());
    CHECK(r.cum_dissipation >= prev_cum - 1e-15);
    prev_cum = r.cum_dissipation;
    CHECK(r.min_pointwise >= 0.0);
    max_defect = std::max(max_defect, std::abs(r.identity_defect));
  }
  CHECK(max_defect <= live.tol_energy());

  EnergyLedger replay = ledger_from_trajectory(sys, curl, hard, rule, c1, eps, tr);
  REQUIRE(replay.rows().size() == live.rows().size());
  for (std::size_t n = 0; n < live.rows().size(); ++n) {
    const auto a = ledger_row_values(live.rows()[n]);
    const auto b = ledger_row_values(replay.rows()[n]);
    for (std::size_t k = 0; k < kLedgerColumns; ++k) CHECK(a[k] == b[k]);
  }

  DissipationReport rep =
      dissipation_check(sys, curl, hard, rule, c1, eps, tr, live.tol_energy());
  CHECK(rep.passed());
  CHECK(rep.min_pointwise >= 0.0);
  CHECK(rep.min_step >= -live.tol_energy());
}

TEST_CASE("rules without potential or certificate mark rows n/a") {
  Grid g = Grid::box(3, 3, 3, 1.0, 1.0, 1.0);
  ElasticTensor c(g, 1.0, 1.0);
  ElasticSystem sys(g, c);
  CurlOperator curl(g);
  HardeningMap hard = HardeningMap::isotropic(0.1);
  NonAssociative rule(1.0, 1.0, 0.1, 0.3);  // beta != 0: no potential, no certificate

  EnergyLedger led(sys, curl, hard, rule, 0.0, 0.0);
  CHECK(!led.has_potential());
  CHECK(!led.has_certificate());

  MatrixField zero_m(g);
  StateField zero_z(g);
  led.push(0, 0.0, 0.0, zero_z, zero_z, StateField(g), zero_m, zero_m);
  StateField z(g);
  z(g.index(1, 1, 1), 0) = 0.5;
  z(g.index(1, 1, 1), 4) = -0.5;
  led.push(1, 0.1, 0.1, zero_z, z, StateField(g), zero_m, zero_m);

  const LedgerRow& r = led.rows()[1];
  CHECK(std::isnan(r.potential));
  CHECK(std::isnan(r.lhs69));
  CHECK(std::isnan(r.lhs56));
  CHECK(std::isnan(r.eps_young));
  CHECK(!std::isnan(r.lhs51));
  CHECK(!std::isnan(r.lhs78));
  CHECK(led.passed());  // only the applicable estimates gate
}

TEST_CASE("korn probe statistics and adversarial families") {
  Grid g = Grid::box(6, 6, 6, 1.0, 1.0, 1.0);
  CurlOperator curl(g);

  KornStatistics st = korn_probe(g, curl, 120, 8, 40, 7);
  CHECK(st.samples == 120);
  CHECK(st.rejected >= 1);  // the constant-skew audit candidate
  CHECK(!st.degenerate_found);
  CHECK(st.max_ratio > 0.0);
  CHECK(st.mean_ratio > 0.0);
  CHECK(st.mean_ratio <= st.max_ratio);
  CHECK(st.max_ratio_optimized >= st.max_ratio);
  CHECK(std::isfinite(st.max_ratio_optimized));

  SUBCASE("symmetric fields never exceed ratio one") {
    Rng rng(21);
    for (int k = 0; k < 5; ++k) {
      MatrixField p(g);
      for (std::size_t n = 0; n < p.nodes(); ++n) {
        Mat3 m{};
        for (int i = 0; i < 3; ++i)
          for (int j = i; j < 3; ++j) m(i, j) = m(j, i) = rng.gaussian();
        set_mat(p, n, m);
      }
      curl.mask().apply(p);
      const double np = norm2(g, p);
      REQUIRE(np > 0.0);
      const double den = norm2(g, sym_field(p)) + norm2(g, curl.curl(p));
      CHECK(np / den <= 1.0 + 1e-12);
    }
  }

  SUBCASE("maxima are stable across grids") {
    Grid g2 = Grid::box(8, 8, 8, 1.0, 1.0, 1.0);
    CurlOperator curl2(g2);
    KornStatistics st2 = korn_probe(g2, curl2, 120, 8, 40, 7);
    const double a = st.max_ratio_optimized, b = st2.max_ratio_optimized;
    CHECK(std::max(a, b) / std::min(a, b) <= 2.0);
  }
}

TEST_CASE("perturbed solver internals reproduce the same solution") {
  Grid g = Grid::box(5, 5, 5, 1.0, 1.0, 1.0);
  ElasticTensor c(g, 1.0, 1.0);
  ElasticSystem sys(g, c);
  CurlOperator curl(g);
  HardeningMap hard = HardeningMap::isotropic(0.1);
  NortonHoff rule(1.0, 1.0, 0.1, 0.5);
  const double c1 = 0.1, eps = 1e-6;
  RotheScheme probe(sys, curl, hard, rule, c1, eps);

  Rng rng(13);
  VectorField b1 = random_vector_field(g, rng, 1.0);
  const double T = 0.5;
  auto load = calibrated_ramp(probe, b1, rule.sigma_y(), 3.0, T);

  UniquenessReport rep = uniqueness_test(sys, curl, hard, rule, c1, eps, RotheOptions{},
                                         load, StateField(g), T, 8, 0.05, 3);
  CHECK(rep.passed);
  CHECK(rep.steps == 8);
  CHECK(rep.gamma_bound_holds);
  CHECK(rep.max_state_diff <= rep.tolerance * std::max(rep.state_scale, 1e-12));
  CHECK(rep.state_scale > 0.0);  // the scenario is genuinely plastic

  SUBCASE("identical runs are bitwise equal") {
    RotheScheme s1(sys, curl, hard, rule, c1, eps);
    RotheScheme s2(sys, curl, hard, rule, c1, eps);
    Trajectory t1 = s1.run(load, StateField(g), T, 6, false);
    Trajectory t2 = s2.run(load, StateField(g), T, 6, false);
    for (std::size_t n = 0; n < t1.states.size(); ++n) {
      StateField d = t1.states[n];
      d -= t2.states[n];
      CHECK(sup_norm(d) == 0.0);
    }
  }
}

TEST_CASE("refinement differences shrink in time step and regularization") {
  Grid g = Grid::box(4, 4, 4, 1.0, 1.0, 1.0);
  ElasticTensor c(g, 1.0, 1.0);
  ElasticSystem sys(g, c);
  CurlOperator curl(g);
  HardeningMap hard = HardeningMap::isotropic(0.1);
  NortonHoff rule(1.0, 1.0, 0.1, 0.5);
  const double c1 = 0.1, eps = 1e-6;
  RotheScheme probe(sys, curl, hard, rule, c1, eps);

  Rng rng(17);
  VectorField b1 = random_vector_field(g, rng, 1.0);
  const double T = 0.5;
  auto load = calibrated_ramp(probe, b1, rule.sigma_y(), 3.0, T);

  ConvergenceTable table =
      convergence_study(sys, curl, hard, rule, c1, eps, RotheOptions{}, load, StateField(g),
                        T, 6, 3, {1e-2, 1e-4, 1e-6});
  REQUIRE(table.time_differences.size() == 2);
  CHECK(table.time_differences[0] > 0.0);
  CHECK(table.time_monotone);
  CHECK(table.final_ratio <= 0.9);
  REQUIRE(table.eps_differences.size() == 2);
  CHECK(table.eps_monotone);

  SUBCASE("concurrent levels merge to the sequential table") {
    ConvergenceTable par =
        convergence_study(sys, curl, hard, rule, c1, eps, RotheOptions{}, load, StateField(g),
                          T, 6, 3, {1e-2, 1e-4, 1e-6}, 3);
    REQUIRE(par.time_differences.size() == table.time_differences.size());
    for (std::size_t k = 0; k < table.time_differences.size(); ++k)
      CHECK(par.time_differences[k] == table.time_differences[k]);
    for (std::size_t k = 0; k < table.eps_differences.size(); ++k)
      CHECK(par.eps_differences[k] == table.eps_differences[k]);
    CHECK(par.final_ratio == table.final_ratio);
  }

  SUBCASE("elastic scenario repeats exactly at every level") {
    auto weak = calibrated_ramp(probe, b1, rule.sigma_y(), 0.5, T);
    ConvergenceTable t2 = convergence_study(sys, curl, hard, rule, c1, eps, RotheOptions{},
                                            weak, StateField(g), T, 4, 3, {});
    for (double d : t2.time_differences) CHECK(d == 0.0);
    CHECK(t2.time_monotone);
    CHECK(t2.final_ratio == 0.0);
  }
}
