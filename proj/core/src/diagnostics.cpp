#include "gradplast/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>

#include "gradplast/rng.hpp"

namespace gradplast {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double sq(double x) { return x * x; }

// (a, B b) with B the nodal compliance; inputs must be symmetric.
double compliance_inner(const ElasticSystem& sys, const MatrixField& a, const MatrixField& b) {
  const Grid& g = sys.grid();
  double acc = 0.0;
  for (std::size_t n = 0; n < g.node_count(); ++n)
    acc += g.weight(n) * ddot(get_mat(a, n), sys.tensor().apply_inverse(n, get_mat(b, n)));
  return acc;
}

// |B^{1/2} s|^2.
double compliance_quad(const ElasticSystem& sys, const MatrixField& s) {
  const Grid& g = sys.grid();
  double acc = 0.0;
  for (std::size_t n = 0; n < g.node_count(); ++n)
    acc += g.weight(n) * sys.tensor().compliance_energy_density(n, get_mat(s, n));
  return acc;
}

double min_pointwise_dissipation(const FlowRule& rule, const StateField& slin) {
  double worst = std::numeric_limits<double>::infinity();
  for (std::size_t n = 0; n < slin.nodes(); ++n) {
    const StateVec v = get_state(slin, n);
    worst = std::min(worst, state_dot(rule.eval(v), v));
  }
  return slin.nodes() ? worst : 0.0;
}

}  // namespace

const std::array<const char*, kLedgerColumns>& ledger_column_names() {
  static const std::array<const char*, kLedgerColumns> names = {
      "step",
      "time",
      "eq51_elastic",
      "eq51_hardening",
      "eq51_regularization",
      "eq51_curl",
      "eq51_cum_sigma_lq",
      "eq51_cum_rate_lq",
      "eq51_initial_energy",
      "eq51_lhs",
      "eq51_rhs",
      "eq51_slack",
      "eq52_eps_young",
      "eq52_c_eps",
      "eq56_lhs",
      "eq56_rhs",
      "eq56_slack",
      "eq54_load_work",
      "eq54_identity_defect",
      "eq69_potential",
      "eq69_lhs",
      "eq69_rhs",
      "eq69_slack",
      "eq78_elastic_rate",
      "eq78_hardening_rate",
      "eq78_regularization_rate",
      "eq78_curl_rate",
      "eq78_lhs",
      "eq78_rhs",
      "eq78_slack",
      "eq9_step_dissipation",
      "eq9_cum_dissipation",
      "eq9_min_pointwise",
  };
  return names;
}

std::array<double, kLedgerColumns> ledger_row_values(const LedgerRow& r) {
  return {static_cast<double>(r.step),
          r.time,
          r.elastic,
          r.hardening,
          r.regularization,
          r.curl,
          r.cum_sigma_lq,
          r.cum_rate_lq,
          r.initial_energy,
          r.lhs51,
          r.rhs51,
          r.slack51,
          r.eps_young,
          r.c_eps,
          r.lhs56,
          r.rhs56,
          r.slack56,
          r.load_work,
          r.identity_defect,
          r.potential,
          r.lhs69,
          r.rhs69,
          r.slack69,
          r.elastic_rate,
          r.hardening_rate,
          r.regularization_rate,
          r.curl_rate,
          r.lhs78,
          r.rhs78,
          r.slack78,
          r.step_dissipation,
          r.cum_dissipation,
          r.min_pointwise};
}

EnergyLedger::EnergyLedger(const ElasticSystem& sys, const CurlOperator& curl,
                           const HardeningMap& hardening, const FlowRule& rule, double c1,
                           double eps_reg)
    : sys_(&sys),
      curl_(&curl),
      hard_(&hardening),
      rule_(&rule),
      c1_(c1),
      eps_(eps_reg),
      prev_sigma_tilde_(sys.grid()),
      prev_ell_(sys.grid()),
      prev_rtz_(sys.grid()) {
  if (!curl.grid().same_layout(sys.grid()))
    throw std::invalid_argument("ledger: curl operator lives on a different grid");
  if (!(c1 >= 0.0) || !std::isfinite(c1))
    throw std::invalid_argument("ledger: c1 must be finite and non-negative");
  if (!(eps_reg >= 0.0) || !std::isfinite(eps_reg))
    throw std::invalid_argument("ledger: eps_reg must be finite and non-negative");
  vol_ = sys.grid().volume();
  has_pot_ = rule.has_potential();
  try {
    cert_ = rule.certificate();
    has_cert_ = cert_.alpha > 0.0 && cert_.q > 1.0;
  } catch (const std::exception&) {
    has_cert_ = false;
  }
  if (has_cert_) {
    q_ = cert_.q;
    qs_ = cert_.conjugate();
    const double a_c = sys.tensor().compliance_min_eigenvalue();
    eps_young_ = std::min(std::min(1.0, a_c) / 4.0, cert_.alpha / (2.0 * qs_));
    c_eps_ = 1.0 / (q_ * std::pow(eps_young_ * qs_, q_ / qs_));
  } else {
    eps_young_ = kNaN;
    c_eps_ = kNaN;
  }
}

bool EnergyLedger::push(std::size_t n, double t, double h, const StateField& z_prev,
                        const StateField& z, const StateField& sigma_lin,
                        const MatrixField& sigma, const MatrixField& sigma_hat) {
  const Grid& g = sys_->grid();
  if (n != rows_.size())
    throw std::invalid_argument("ledger: rows must arrive in step order");
  if (z.nodes() != g.node_count() || z_prev.nodes() != g.node_count() ||
      sigma_lin.nodes() != g.node_count() || sigma.nodes() != g.node_count() ||
      sigma_hat.nodes() != g.node_count())
    throw std::invalid_argument("ledger: field does not match the grid");
  if (n > 0 && !(h > 0.0)) throw std::invalid_argument("ledger: step size must be positive");

  MatrixField st = sigma;
  st -= sigma_hat;
  MatrixField cp = curl_->curl_masked(state_p_block(z));
  StateField ell = embed_matrix(sigma_hat);

  LedgerRow r;
  r.step = n;
  r.time = t;
  r.elastic = compliance_quad(*sys_, st);
  r.hardening = hard_->quadratic(g, z);
  r.regularization = eps_ * sq(norm2(g, z));
  r.curl = c1_ * sq(norm2(g, cp));
  const double e_n = 0.5 * (r.elastic + r.hardening + r.regularization + r.curl);
  r.eps_young = eps_young_;
  r.c_eps = c_eps_;
  r.potential = has_pot_ ? rule_->potential_integral(g, sigma_lin) : kNaN;
  r.min_pointwise = min_pointwise_dissipation(*rule_, sigma_lin);

  if (n == 0) {
    e0_ = e_n;
    tol_ = 1e-8 * (e0_ + 1.0);
    r.initial_energy = e0_;
    r.lhs51 = r.rhs51 = e_n;
    if (has_cert_) {
      r.lhs56 = r.rhs56 = e_n;
    } else {
      r.lhs56 = r.rhs56 = r.slack56 = kNaN;
    }
    if (has_pot_) {
      pot0_ = r.potential;
      r.lhs69 = r.rhs69 = r.potential;
    } else {
      r.lhs69 = r.rhs69 = r.slack69 = kNaN;
    }

    // Virtual initial rate z_dot_0 = g(Sigma_lin_0) and its load-free
    // stress response; seeds the rate estimate.
    StateField rtz0 = rule_->eval_field(sigma_lin);
    VectorField zero_b(g);
    const ElasticResult er =
        sys_->solve_dirichlet(sym_field(state_p_block(rtz0)), zero_b);
    r.elastic_rate = compliance_quad(*sys_, er.sigma);
    r.hardening_rate = hard_->quadratic(g, rtz0);
    r.regularization_rate = eps_ * sq(norm2(g, rtz0));
    r.curl_rate = c1_ * sq(norm2(g, curl_->curl_masked(state_p_block(rtz0))));
    rate_sum0_ = r.elastic_rate + r.hardening_rate + r.regularization_rate + r.curl_rate;

    prev_sigma_tilde_ = std::move(st);
    prev_ell_ = std::move(ell);
    prev_rtz_ = std::move(rtz0);
    rows_.push_back(r);
    return true;
  }

  StateField dz = z;
  dz -= z_prev;
  StateField rtz = dz;
  rtz *= 1.0 / h;
  MatrixField dst = st;
  dst -= prev_sigma_tilde_;
  MatrixField dcp = curl_->curl_masked(state_p_block(dz));
  StateField dell = ell;
  dell -= prev_ell_;

  const double load_inc = inner(g, ell, dz);
  cum_load_work_ += load_inc;
  r.load_work = cum_load_work_;

  const double diss = inner(g, sigma_lin, dz);
  r.step_dissipation = diss;
  cum_diss_ += diss;
  r.cum_dissipation = cum_diss_;

  r.identity_defect = load_inc - compliance_inner(*sys_, st, dst) -
                      inner(g, hard_->apply(z), dz) - eps_ * inner(g, z, dz) -
                      c1_ * inner(g, cp, dcp) - diss;

  cum_sigma_lq_ += h * lq_norm_pow(g, sigma_lin, q_);
  const double rate_pow = lq_norm_pow(g, rtz, qs_);
  cum_rate_lq_ += h * rate_pow;
  r.cum_sigma_lq = cum_sigma_lq_;
  r.cum_rate_lq = cum_rate_lq_;

  const double alpha = has_cert_ ? cert_.alpha : 0.0;
  const double m_off = has_cert_ ? cert_.m : 0.0;
  double rho_pow = 0.0;
  if (has_cert_) {
    rho_pow = lq_norm_pow(g, rule_->overstress_field(sigma_lin), q_);
    cum_lower51_ += h * alpha * (rho_pow / q_ + rate_pow / qs_);
  }
  r.initial_energy = e0_;
  r.lhs51 = e_n + cum_lower51_;
  r.rhs51 = e0_ + t * m_off * vol_ + cum_load_work_;
  r.slack51 = r.rhs51 - r.lhs51;

  if (has_cert_) {
    cum56_ += h * ((alpha / q_) * rho_pow + (alpha / qs_ - eps_young_) * rate_pow);
    cum_cload56_ += h * c_eps_ * lq_norm_pow(g, ell, q_);
    r.lhs56 = e_n + cum56_;
    r.rhs56 = e0_ + t * m_off * vol_ + cum_cload56_;
    r.slack56 = r.rhs56 - r.lhs56;
  } else {
    r.lhs56 = r.rhs56 = r.slack56 = kNaN;
  }

  r.elastic_rate = compliance_quad(*sys_, dst) / (h * h);
  r.hardening_rate = hard_->quadratic(g, rtz);
  r.regularization_rate = eps_ * sq(norm2(g, rtz));
  r.curl_rate = c1_ * sq(norm2(g, dcp)) / (h * h);
  const double rate_sum =
      r.elastic_rate + r.hardening_rate + r.regularization_rate + r.curl_rate;

  if (has_pot_) {
    cum69_ += h * rate_sum;
    cum_load_rate_ += inner(g, rtz, dell);
    r.lhs69 = cum69_ + r.potential;
    r.rhs69 = pot0_ + cum_load_rate_;
    r.slack69 = r.rhs69 - r.lhs69;
  } else {
    r.lhs69 = r.rhs69 = r.slack69 = kNaN;
  }

  StateField da = rtz;
  da -= prev_rtz_;
  cum78_load_ += inner(g, dell, da);
  r.lhs78 = 0.5 * h * rate_sum;
  r.rhs78 = 0.5 * h * rate_sum0_ + cum78_load_;
  r.slack78 = r.rhs78 - r.lhs78;

  bool ok = r.slack51 >= -tol_ && r.slack78 >= -tol_;
  if (has_cert_) ok = ok && r.slack56 >= -tol_;
  if (has_pot_) ok = ok && r.slack69 >= -tol_;
  r.pass = ok;
  if (!ok) ++failures_;

  prev_sigma_tilde_ = std::move(st);
  prev_ell_ = std::move(ell);
  prev_rtz_ = std::move(rtz);
  rows_.push_back(r);
  return ok;
}

bool EnergyLedger::push(const StepView& v) {
  return push(v.n, v.t, v.h, v.z_prev, v.z, v.sigma_lin, v.sigma, v.sigma_hat);
}

EnergyLedger ledger_from_trajectory(const ElasticSystem& sys, const CurlOperator& curl,
                                    const HardeningMap& hardening, const FlowRule& rule,
                                    double c1, double eps_reg, const Trajectory& traj) {
  const std::size_t rows = traj.states.size();
  if (rows == 0) throw std::invalid_argument("ledger: empty trajectory");
  if (!traj.store_extras || traj.sigma_lin.size() != rows || traj.sigma.size() != rows ||
      traj.sigma_hat.size() != rows)
    throw std::invalid_argument("ledger: trajectory was recorded without extras");
  EnergyLedger led(sys, curl, hardening, rule, c1, eps_reg);
  for (std::size_t n = 0; n < rows; ++n) {
    const StateField& z_prev = traj.states[n == 0 ? 0 : n - 1];
    led.push(n, traj.times[n], n == 0 ? 0.0 : traj.dt, z_prev, traj.states[n],
             traj.sigma_lin[n], traj.sigma[n], traj.sigma_hat[n]);
  }
  return led;
}

DissipationReport dissipation_check(const ElasticSystem& sys, const CurlOperator& curl,
                                    const HardeningMap& hardening, const FlowRule& rule,
                                    double c1, double eps_reg, const Trajectory& traj,
                                    double tol) {
  const Grid& g = sys.grid();
  const std::size_t rows = traj.states.size();
  if (rows == 0) throw std::invalid_argument("dissipation_check: empty trajectory");
  if (!traj.store_extras || traj.sigma_lin.size() != rows || traj.sigma.size() != rows ||
      traj.u.size() != rows)
    throw std::invalid_argument("dissipation_check: trajectory was recorded without extras");
  if (!(tol >= 0.0)) throw std::invalid_argument("dissipation_check: tol must be >= 0");

  DissipationReport rep;
  rep.steps = rows - 1;
  rep.tolerance = tol;
  rep.min_step = std::numeric_limits<double>::infinity();
  rep.min_pointwise = std::numeric_limits<double>::infinity();
  rep.max_imbalance = -std::numeric_limits<double>::infinity();

  auto stored_energy = [&](std::size_t n) {
    const StateField& z = traj.states[n];
    const MatrixField cp = curl.curl_masked(state_p_block(z));
    return 0.5 * compliance_quad(sys, traj.sigma[n]) + 0.5 * hardening.quadratic(g, z) +
           0.5 * eps_reg * sq(norm2(g, z)) + 0.5 * c1 * sq(norm2(g, cp));
  };

  double psi_prev = stored_energy(0);
  MatrixField e_prev = sym_field(sys.gradient(traj.u[0]));
  rep.min_pointwise =
      std::min(rep.min_pointwise, min_pointwise_dissipation(rule, traj.sigma_lin[0]));

  for (std::size_t n = 1; n < rows; ++n) {
    StateField dz = traj.states[n];
    dz -= traj.states[n - 1];
    const double diss = inner(g, traj.sigma_lin[n], dz);
    rep.min_step = std::min(rep.min_step, diss);
    if (diss < -tol) ++rep.violations;

    const double mp = min_pointwise_dissipation(rule, traj.sigma_lin[n]);
    rep.min_pointwise = std::min(rep.min_pointwise, mp);
    if (mp < 0.0) ++rep.violations;

    const double psi_n = stored_energy(n);
    MatrixField e_n = sym_field(sys.gradient(traj.u[n]));
    MatrixField de = e_n;
    de -= e_prev;
    const double imbalance = psi_n - psi_prev - inner(g, traj.sigma[n], de);
    rep.max_imbalance = std::max(rep.max_imbalance, imbalance);
    if (imbalance > tol) ++rep.violations;

    psi_prev = psi_n;
    e_prev = std::move(e_n);
  }
  if (rep.steps == 0) {
    rep.min_step = 0.0;
    rep.max_imbalance = 0.0;
  }
  return rep;
}

namespace {

Mat3 make_skew(double w0, double w1, double w2) {
  Mat3 m{};
  m(0, 1) = -w2;
  m(0, 2) = w1;
  m(1, 0) = w2;
  m(1, 2) = -w0;
  m(2, 0) = -w1;
  m(2, 1) = w0;
  m(0, 0) = m(1, 1) = m(2, 2) = 0.0;
  return m;
}

// Families of raw candidates, before masking.
MatrixField korn_candidate(const Grid& g, Rng& rng, std::size_t k) {
  MatrixField p(g);
  switch (k % 4) {
    case 0:  // plain random
      for (std::size_t i = 0; i < p.size(); ++i) p[i] = rng.gaussian();
      break;
    case 1:  // nodewise skew
      for (std::size_t n = 0; n < p.nodes(); ++n)
        set_mat(p, n, make_skew(rng.gaussian(), rng.gaussian(), rng.gaussian()));
      break;
    case 2: {  // gradient of a modulated rotation field: skew-heavy, smooth
      const double w0 = rng.gaussian(), w1 = rng.gaussian(), w2 = rng.gaussian();
      const double a0 = rng.gaussian(), a1 = rng.gaussian(), a2 = rng.gaussian();
      const Mat3 omega = make_skew(w0, w1, w2);
      for (std::size_t n = 0; n < p.nodes(); ++n) {
        const auto c = g.coords(n);
        const auto x = g.position(c[0], c[1], c[2]);
        const double phi = 1.0 + a0 * x[0] + a1 * x[1] + a2 * x[2];
        // grad((omega x x) phi) = Omega phi + (omega x x) a^T
        const double v0 = w1 * x[2] - w2 * x[1];
        const double v1 = w2 * x[0] - w0 * x[2];
        const double v2 = w0 * x[1] - w1 * x[0];
        Mat3 m = phi * omega;
        m(0, 0) += v0 * a0;
        m(0, 1) += v0 * a1;
        m(0, 2) += v0 * a2;
        m(1, 0) += v1 * a0;
        m(1, 1) += v1 * a1;
        m(1, 2) += v1 * a2;
        m(2, 0) += v2 * a0;
        m(2, 1) += v2 * a1;
        m(2, 2) += v2 * a2;
        set_mat(p, n, m);
      }
      break;
    }
    default: {  // rowwise gradients of quadratic potentials: curl-free raw
      std::array<double, 9> c{};
      std::array<double, 27> s{};
      for (auto& v : c) v = rng.gaussian();
      for (auto& v : s) v = rng.gaussian();
      for (std::size_t n = 0; n < p.nodes(); ++n) {
        const auto cc = g.coords(n);
        const auto x = g.position(cc[0], cc[1], cc[2]);
        Mat3 m{};
        for (int i = 0; i < 3; ++i)
          for (int j = 0; j < 3; ++j) {
            // row i = grad phi_i, phi_i = c_i . x + x^T S_i x with S_i symmetric
            double v = c[i * 3 + j];
            for (int l = 0; l < 3; ++l)
              v += (s[i * 9 + j * 3 + l] + s[i * 9 + l * 3 + j]) * x[l];
            m(i, j) = v;
          }
        set_mat(p, n, m);
      }
      break;
    }
  }
  return p;
}

}  // namespace

KornStatistics korn_probe(const Grid& g, const CurlOperator& curl, std::size_t samples,
                          std::size_t ascent_starts, std::size_t ascent_iterations,
                          std::uint64_t seed) {
  if (samples < 1) throw std::invalid_argument("korn_probe: need at least one sample");
  if (!curl.grid().same_layout(g))
    throw std::invalid_argument("korn_probe: curl operator lives on a different grid");
  const TangentialMask& mask = curl.mask();
  Rng rng(seed);
  KornStatistics st;

  auto ratio_of = [&](const MatrixField& p) -> double {
    const double np = norm2(g, p);
    if (np == 0.0) return -1.0;
    const double den = norm2(g, sym_field(p)) + norm2(g, curl.curl(p));
    if (den <= 1e-14 * np) {
      st.degenerate_found = true;
      return -1.0;
    }
    return np / den;
  };

  // The canonical inadmissible candidate: a constant skew field carries a
  // nonzero tangential trace and is rejected, not evaluated.
  {
    MatrixField probe(g);
    const Mat3 omega = make_skew(1.0, -0.5, 0.25);
    for (std::size_t n = 0; n < probe.nodes(); ++n) set_mat(probe, n, omega);
    MatrixField masked = probe;
    mask.apply(masked);
    masked -= probe;
    if (sup_norm(masked) > 0.0) ++st.rejected;
  }

  std::vector<std::pair<double, MatrixField>> best;
  double sum = 0.0;
  std::size_t evaluated = 0;
  for (std::size_t k = 0; k < samples; ++k) {
    MatrixField p = korn_candidate(g, rng, k);
    mask.apply(p);
    const double r = ratio_of(p);
    if (r < 0.0) continue;
    ++evaluated;
    sum += r;
    st.max_ratio = std::max(st.max_ratio, r);
    best.emplace_back(r, std::move(p));
    std::sort(best.begin(), best.end(),
              [](const auto& a, const auto& b) { return a.first > b.first; });
    if (best.size() > std::max<std::size_t>(ascent_starts, 1)) best.pop_back();
  }
  st.samples = evaluated;
  st.mean_ratio = evaluated ? sum / static_cast<double>(evaluated) : 0.0;
  st.max_ratio_optimized = st.max_ratio;

  if (ascent_starts == 0 || ascent_iterations == 0) return st;

  for (std::size_t s = 0; s < best.size() && s < ascent_starts; ++s) {
    MatrixField p = best[s].second;
    double nrm = norm2(g, p);
    if (nrm == 0.0) continue;
    p *= 1.0 / nrm;
    double cur = ratio_of(p);
    if (cur < 0.0) continue;
    double step = 0.1;
    for (std::size_t it = 0; it < ascent_iterations; ++it) {
      const MatrixField sp = sym_field(p);
      const double sn = norm2(g, sp);
      const double cn = std::sqrt(std::max(0.0, inner(g, curl.curl_curl(p), p)));
      const double den = sn + cn;
      if (den <= 1e-14) {
        st.degenerate_found = true;
        break;
      }
      // gradient of |p|^2 / (|sym p| + |Curl p|)^2 in the weighted metric
      MatrixField grad = p;
      grad *= 2.0 / (den * den);
      const double np2 = sq(norm2(g, p));
      if (sn > 1e-300) {
        MatrixField t = sp;
        t *= 2.0 * np2 / (den * den * den * sn);
        grad -= t;
      }
      if (cn > 1e-300) {
        MatrixField t = curl.curl_curl(p);
        t *= 2.0 * np2 / (den * den * den * cn);
        grad -= t;
      }
      const double gn = norm2(g, grad);
      if (gn <= 1e-300) break;
      MatrixField cand = grad;
      cand *= step / gn;
      cand += p;
      mask.apply(cand);
      const double cnrm = norm2(g, cand);
      if (cnrm > 0.0) cand *= 1.0 / cnrm;
      const double rc = ratio_of(cand);
      if (rc > cur) {
        p = std::move(cand);
        cur = rc;
        step *= 1.3;
      } else {
        step *= 0.5;
        if (step < 1e-7) break;
      }
    }
    st.max_ratio_optimized = std::max(st.max_ratio_optimized, cur);
  }
  return st;
}

UniquenessReport uniqueness_test(const ElasticSystem& sys, const CurlOperator& curl,
                                 const HardeningMap& hardening, const FlowRule& rule,
                                 double c1, double eps_reg, const RotheOptions& opts,
                                 const RotheScheme::LoadFn& load, const StateField& z0,
                                 double total_time, std::size_t steps, double perturbation,
                                 std::uint64_t seed, double tol_unique) {
  const Grid& g = sys.grid();
  if (!(perturbation >= 0.0) || !std::isfinite(perturbation))
    throw std::invalid_argument("uniqueness_test: perturbation must be finite and >= 0");

  RotheScheme ref(sys, curl, hardening, rule, c1, eps_reg, opts);
  const Trajectory ta = ref.run(load, z0, total_time, steps, true);

  UniquenessReport rep;
  rep.steps = steps;
  rep.tolerance = tol_unique;
  for (std::size_t n = 0; n < ta.states.size(); ++n) {
    MatrixField stn = ta.sigma[n];
    stn -= ta.sigma_hat[n];
    rep.stress_scale = std::max(rep.stress_scale, std::sqrt(compliance_quad(sys, stn)));
    rep.curl_scale = std::max(
        rep.curl_scale, norm2(g, curl.curl_masked(state_p_block(ta.states[n]))));
    rep.state_scale =
        std::max(rep.state_scale, std::sqrt(hardening.quadratic(g, ta.states[n])));
  }

  // Second solve: different damping and acceleration depth, perturbed
  // initial iterates.
  RotheOptions alt = opts;
  alt.initial_damping = std::max(opts.min_damping, 0.5 * opts.initial_damping);
  alt.anderson_depth = std::max(2, opts.anderson_depth - 2);
  RotheScheme other(sys, curl, hardening, rule, c1, eps_reg, alt);
  Rng rng(seed);

  const double h = total_time / static_cast<double>(steps);
  StateField zb = z0;
  const double alpha_gamma =
      hardening.is_isotropic() ? hardening.k_iso() : hardening.min_eigenvalue();

  for (std::size_t n = 1; n <= steps; ++n) {
    const double t_prev = h * static_cast<double>(n - 1);
    VectorField b1 = load(t_prev + h * (0.5 - kSlabGaussOffset));
    VectorField b2 = load(t_prev + h * (0.5 + kSlabGaussOffset));
    b1 += b2;
    b1 *= 0.5;
    other.sigma_lin().set_load(b1);

    StateField start = zb;
    const double amp = perturbation * std::max(1.0, norm2(g, zb));
    for (std::size_t i = 0; i < start.size(); ++i) start[i] += amp * rng.gaussian();
    StateField zn = other.incremental_solve(zb, h, &start).first;
    const ElasticResult full =
        sys.solve_dirichlet(sym_field(state_p_block(zn)), b1);

    MatrixField dsig = ta.sigma[n];
    dsig -= full.sigma;
    rep.max_stress_diff =
        std::max(rep.max_stress_diff, std::sqrt(compliance_quad(sys, dsig)));

    StateField dz = ta.states[n];
    dz -= zn;
    rep.max_curl_diff =
        std::max(rep.max_curl_diff, norm2(g, curl.curl_masked(state_p_block(dz))));
    const double hq = hardening.quadratic(g, dz);
    rep.max_state_diff = std::max(rep.max_state_diff, std::sqrt(hq));

    double gamma2 = 0.0;
    for (std::size_t node = 0; node < g.node_count(); ++node)
      gamma2 += g.weight(node) * sq(dz(node, 9));
    rep.max_gamma_diff = std::max(rep.max_gamma_diff, std::sqrt(gamma2));
    if (alpha_gamma > 0.0) {
      const double bound2 = hq / alpha_gamma;
      rep.gamma_bound = std::max(rep.gamma_bound, std::sqrt(bound2));
      if (gamma2 > bound2 * (1.0 + 1e-9) + 1e-300) rep.gamma_bound_holds = false;
    }

    zb = std::move(zn);
  }

  const double floor = 1e-12;
  rep.passed = rep.max_stress_diff <= tol_unique * std::max(rep.stress_scale, floor) &&
               rep.max_curl_diff <= tol_unique * std::max(rep.curl_scale, floor) &&
               rep.max_state_diff <= tol_unique * std::max(rep.state_scale, floor) &&
               rep.gamma_bound_holds;
  return rep;
}

ConvergenceTable convergence_study(const ElasticSystem& sys, const CurlOperator& curl,
                                   const HardeningMap& hardening, const FlowRule& rule,
                                   double c1, double eps_reg, const RotheOptions& opts,
                                   const RotheScheme::LoadFn& load, const StateField& z0,
                                   double total_time, std::size_t base_steps,
                                   std::size_t levels, const std::vector<double>& eps_sweep,
                                   std::size_t workers) {
  const Grid& g = sys.grid();
  if (levels < 2) throw std::invalid_argument("convergence_study: need at least two levels");
  if (base_steps < 1) throw std::invalid_argument("convergence_study: need at least one step");

  auto final_state = [&](double eps, std::size_t n_k) {
    RotheScheme scheme(sys, curl, hardening, rule, c1, eps, opts);
    Trajectory tr = scheme.run(load, z0, total_time, n_k, false);
    return tr.states.back();
  };
  // bounded waves; merge order is by index, independent of worker count
  auto run_batch = [&](const std::vector<std::pair<double, std::size_t>>& jobs) {
    std::vector<StateField> out;
    out.reserve(jobs.size());
    if (workers <= 1) {
      for (const auto& [eps, n_k] : jobs) out.push_back(final_state(eps, n_k));
      return out;
    }
    std::vector<std::future<StateField>> futs(jobs.size());
    for (std::size_t base = 0; base < jobs.size(); base += workers) {
      const std::size_t stop = std::min(jobs.size(), base + workers);
      for (std::size_t k = base; k < stop; ++k)
        futs[k] = std::async(std::launch::async, final_state, jobs[k].first, jobs[k].second);
      for (std::size_t k = base; k < stop; ++k) out.push_back(futs[k].get());
    }
    return out;
  };

  ConvergenceTable table;
  std::vector<std::pair<double, std::size_t>> jobs;
  for (std::size_t k = 0; k < levels; ++k) {
    const std::size_t n_k = base_steps << k;
    table.step_counts.push_back(n_k);
    jobs.emplace_back(eps_reg, n_k);
  }
  std::vector<StateField> finals = run_batch(jobs);
  for (std::size_t k = 0; k + 1 < finals.size(); ++k) {
    StateField d = finals[k];
    d -= finals[k + 1];
    table.time_differences.push_back(norm2(g, d));
  }
  table.time_monotone = true;
  for (std::size_t k = 0; k + 1 < table.time_differences.size(); ++k)
    if (table.time_differences[k + 1] > table.time_differences[k] * (1.0 + 1e-12))
      table.time_monotone = false;
  if (table.time_differences.size() >= 2) {
    const double prev = table.time_differences[table.time_differences.size() - 2];
    const double last = table.time_differences.back();
    table.final_ratio = prev > 0.0 ? last / prev : 0.0;
  }

  if (!eps_sweep.empty()) {
    table.eps_values = eps_sweep;
    jobs.clear();
    for (double eps : eps_sweep) {
      if (!(eps >= 0.0) || !std::isfinite(eps))
        throw std::invalid_argument("convergence_study: eps values must be finite and >= 0");
      jobs.emplace_back(eps, base_steps);
    }
    std::vector<StateField> eps_finals = run_batch(jobs);
    for (std::size_t k = 0; k + 1 < eps_finals.size(); ++k) {
      StateField d = eps_finals[k];
      d -= eps_finals[k + 1];
      table.eps_differences.push_back(norm2(g, d));
    }
    table.eps_monotone = true;
    for (std::size_t k = 0; k + 1 < table.eps_differences.size(); ++k)
      if (table.eps_differences[k + 1] > table.eps_differences[k] * (1.0 + 1e-12))
        table.eps_monotone = false;
  }
  return table;
}

}  // namespace gradplast
