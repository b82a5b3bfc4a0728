#include "gradplast/rothe.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <deque>
#include <limits>
#include <stdexcept>

namespace gradplast {

namespace {

// Solve a small dense symmetric system in place, Gaussian elimination with
// partial pivoting. Used for the Anderson least-squares normal equations.
void solve_small(std::vector<double>& a, std::vector<double>& rhs, int m) {
  for (int col = 0; col < m; ++col) {
    int piv = col;
    for (int r = col + 1; r < m; ++r)
      if (std::abs(a[r * m + col]) > std::abs(a[piv * m + col])) piv = r;
    if (piv != col) {
      for (int c = 0; c < m; ++c) std::swap(a[col * m + c], a[piv * m + c]);
      std::swap(rhs[col], rhs[piv]);
    }
    double d = a[col * m + col];
    if (std::abs(d) < 1e-300) {
      rhs[col] = 0.0;
      continue;
    }
    for (int r = col + 1; r < m; ++r) {
      double f = a[r * m + col] / d;
      for (int c = col; c < m; ++c) a[r * m + c] -= f * a[col * m + c];
      rhs[r] -= f * rhs[col];
    }
  }
  for (int col = m - 1; col >= 0; --col) {
    double d = a[col * m + col];
    if (std::abs(d) < 1e-300) continue;
    rhs[col] /= d;
    for (int r = 0; r < col; ++r) rhs[r] -= a[r * m + col] * rhs[col];
  }
}



double max_abs_trace_p(const StateField& z) {
  double m = 0.0;
  for (std::size_t n = 0; n < z.nodes(); ++n)
    m = std::max(m, std::abs(z(n, 0) + z(n, 4) + z(n, 8)));
  return m;
}

} // namespace

SigmaLinOperator::SigmaLinOperator(const ElasticSystem& sys, const CurlOperator& curl,
                                   const HardeningMap& hardening, double c1, double eps_reg)
    : sys_(&sys), curl_(&curl), m_(sys, hardening), c1_(c1), eps_reg_(eps_reg),
      ell_(sys.grid()), warm_m_(sys.grid()), warm_hat_(sys.grid()) {
  if (!sys.grid().same_layout(curl.grid()))
    throw std::invalid_argument("SigmaLinOperator: grid mismatch between elasticity and curl");
  if (!(c1 >= 0.0) || !std::isfinite(c1))
    throw std::invalid_argument("SigmaLinOperator: c1 must be >= 0");
  if (!(eps_reg >= 0.0) || !std::isfinite(eps_reg))
    throw std::invalid_argument("SigmaLinOperator: eps_reg must be >= 0");
}

const ElasticResult& SigmaLinOperator::set_load(const VectorField& b) {
  MatrixField zero_eps(sys_->grid());
  load_ = sys_->solve_dirichlet(zero_eps, b, solve_tol_, &warm_hat_);
  warm_hat_ = load_.u;
  ell_ = embed_matrix(load_.sigma);
  return load_;
}

StateField SigmaLinOperator::apply_homogeneous(const StateField& z) const {
  StateField out = m_.apply(z, solve_tol_, &warm_m_, &warm_m_);
  out *= -1.0;
  y_axpy(-eps_reg_, z, out);
  if (c1_ > 0.0) {
    MatrixField az = curl_->curl_curl(state_p_block(z));
    y_axpy(-c1_, embed_matrix(az), out);
  }
  return out;
}

StateField SigmaLinOperator::apply(const StateField& z) const {
  StateField out = apply_homogeneous(z);
  out += ell_;
  return out;
}

RotheScheme::RotheScheme(const ElasticSystem& sys, const CurlOperator& curl,
                         const HardeningMap& hardening, const FlowRule& rule, double c1,
                         double eps_reg, RotheOptions opts)
    : slin_(sys, curl, hardening, c1, eps_reg), rule_(&rule), opts_(opts),
      last_sigma_lin_(sys.grid()), warm_full_(sys.grid()) {
  if (!(opts_.newton_tol > 0.0))
    throw std::invalid_argument("RotheScheme: newton_tol must be > 0");
  if (!(opts_.initial_damping > 0.0) || opts_.initial_damping > 1.0)
    throw std::invalid_argument("RotheScheme: initial_damping must lie in (0, 1]");
  if (!(opts_.min_damping > 0.0) || opts_.min_damping > opts_.initial_damping)
    throw std::invalid_argument("RotheScheme: min_damping must lie in (0, initial_damping]");
  if (opts_.anderson_depth < 1) opts_.use_anderson = false;
  slin_.set_solve_tol(std::min(sys.options().tol, opts_.newton_tol / 10.0));
}

StateField RotheScheme::fixed_point_map(const StateField& z_prev, double h, const StateField& z) {
  last_sigma_lin_ = slin_.apply(z);
  StateField g = rule_->eval_field(last_sigma_lin_);
  g *= h;
  g += z_prev;
  return g;
}

std::pair<StateField, StepReport> RotheScheme::incremental_solve(const StateField& z_prev, double h,
                                                                 const StateField* initial_iterate) {
  const Grid& g = slin_.system().grid();
  if (z_prev.nodes() != g.node_count())
    throw std::invalid_argument("incremental_solve: state does not match the grid");
  if (!(h > 0.0)) throw std::invalid_argument("incremental_solve: step size must be > 0");

  StepReport rep;
  rep.tolerance = opts_.newton_tol * (norm2(g, z_prev) + h);
  rep.damping = opts_.initial_damping;

  StateField z = initial_iterate ? *initial_iterate : z_prev;
  if (z.nodes() != g.node_count())
    throw std::invalid_argument("incremental_solve: initial iterate does not match the grid");

  StateField best_z = z;
  double best_res = std::numeric_limits<double>::infinity();
  double last_res = std::numeric_limits<double>::infinity();

  // Anderson history: increments of iterates and of residuals f = T(z) - z.
  std::deque<StateField> dz_hist, df_hist;
  StateField prev_z(g), prev_f(g);
  bool have_prev = false;

  const std::size_t depth = static_cast<std::size_t>(std::max(opts_.anderson_depth, 1));

  for (std::size_t it = 0; it < opts_.max_iterations; ++it) {
    StateField tz = fixed_point_map(z_prev, h, z);
    StateField f = tz;
    f -= z;
    double res = norm2(g, f);

    rep.iterations = it + 1;
    rep.residual = res;
    if (res <= rep.tolerance) return {std::move(z), rep};

    if (res < best_res) {
      best_res = res;
      best_z = z;
    }

    if (res > last_res) {
      // The step grew the residual: halve the damping, drop the history,
      // and restart from the best iterate seen.
      rep.damping = std::max(rep.damping * 0.5, opts_.min_damping);
      z = best_z;
      dz_hist.clear();
      df_hist.clear();
      have_prev = false;
      last_res = std::numeric_limits<double>::infinity();
      continue;
    }
    last_res = res;

    if (have_prev) {
      StateField dz = z;
      dz -= prev_z;
      StateField df = f;
      df -= prev_f;
      dz_hist.push_back(std::move(dz));
      df_hist.push_back(std::move(df));
      if (dz_hist.size() > depth) {
        dz_hist.pop_front();
        df_hist.pop_front();
      }
    }
    prev_z = z;
    prev_f = f;
    have_prev = true;

    const double omega = rep.damping;
    StateField z_next = z;
    y_axpy(omega, f, z_next);

    if (opts_.use_anderson && !df_hist.empty()) {
      const int m = static_cast<int>(df_hist.size());
      std::vector<double> gram(static_cast<std::size_t>(m) * m);
      std::vector<double> rhs(m);
      for (int a = 0; a < m; ++a) {
        for (int b = a; b < m; ++b) {
          double s = inner(g, df_hist[a], df_hist[b]);
          gram[a * m + b] = s;
          gram[b * m + a] = s;
        }
        rhs[a] = inner(g, df_hist[a], f);
      }
      double tr = 0.0;
      for (int a = 0; a < m; ++a) tr += gram[a * m + a];
      double ridge = 1e-13 * (tr > 0.0 ? tr : 1.0);
      for (int a = 0; a < m; ++a) gram[a * m + a] += ridge;
      solve_small(gram, rhs, m);
      bool finite = true;
      for (double c : rhs)
        if (!std::isfinite(c)) finite = false;
      if (finite) {
        for (int a = 0; a < m; ++a) {
          y_axpy(-rhs[a], dz_hist[a], z_next);
          y_axpy(-omega * rhs[a], df_hist[a], z_next);
        }
      }
    }
    z = std::move(z_next);
  }

  throw SolveError("incremental_solve: no convergence within max_iterations, residual " +
                   std::to_string(rep.residual) + " > " + std::to_string(rep.tolerance));
}

Trajectory RotheScheme::run(const LoadFn& load, const StateField& z0, double total_time,
                            std::size_t steps, bool store_extras, const Observer& observer) {
  const Grid& g = slin_.system().grid();
  if (!(total_time > 0.0)) throw std::invalid_argument("run: total_time must be > 0");
  if (steps < 1) throw std::invalid_argument("run: need at least one step");
  if (z0.nodes() != g.node_count())
    throw std::invalid_argument("run: initial state does not match the grid");
  if (!load) throw std::invalid_argument("run: load function is empty");
  if (max_abs_trace_p(z0) > 1e-12 * std::max(1.0, sup_norm(z0)))
    throw std::invalid_argument("run: initial plastic distortion must be traceless");

  const double h = total_time / static_cast<double>(steps);

  Trajectory traj;
  traj.dt = h;
  traj.store_extras = store_extras;
  traj.times.reserve(steps + 1);
  traj.states.reserve(steps + 1);
  traj.reports.reserve(steps + 1);
  if (store_extras) {
    traj.sigma_lin.reserve(steps + 1);
    traj.sigma.reserve(steps + 1);
    traj.sigma_hat.reserve(steps + 1);
    traj.u.reserve(steps + 1);
  }

  auto check_load = [&](const VectorField& b) {
    if (b.nodes() != g.node_count())
      throw std::invalid_argument("run: load field does not match the grid");
  };

  auto record = [&](double t, const StateField& z, const StepReport& rep,
                    const StateField& slin, const ElasticResult& full) {
    traj.times.push_back(t);
    traj.states.push_back(z);
    traj.reports.push_back(rep);
    if (store_extras) {
      traj.sigma_lin.push_back(slin);
      traj.sigma.push_back(full.sigma);
      traj.sigma_hat.push_back(slin_.load_response().sigma);
      traj.u.push_back(full.u);
    }
  };

  // Initial point: instantaneous load b(0), equilibrium at z0.
  VectorField b_bar = load(0.0);
  check_load(b_bar);
  const ElasticResult* hat = &slin_.set_load(b_bar);
  StateField z = z0;
  ElasticResult full = slin_.system().solve_dirichlet(sym_field(state_p_block(z)), b_bar, {}, &warm_full_);
  warm_full_ = full.u;
  StateField slin_at_z = slin_.apply(z);
  StepReport blank;
  record(0.0, z, blank, slin_at_z, full);
  if (observer) {
    StepView view{0, 0.0, 0.0, z, z, slin_at_z, slin_.ell(), b_bar,
                  full.u, full.sigma, hat->sigma, hat->u, blank};
    if (!observer(view)) {
      traj.aborted = true;
      traj.aborted_at = 0;
      return traj;
    }
  }

  StateField z_before = z; // z_{n-2} once two states exist
  bool have_two = false;

  for (std::size_t n = 1; n <= steps; ++n) {
    const double t_prev = h * static_cast<double>(n - 1);
    const double t = h * static_cast<double>(n);

    VectorField b1 = load(t_prev + h * (0.5 - kSlabGaussOffset));
    VectorField b2 = load(t_prev + h * (0.5 + kSlabGaussOffset));
    check_load(b1);
    check_load(b2);
    b_bar = b1;
    b_bar += b2;
    b_bar *= 0.5;

    hat = &slin_.set_load(b_bar);

    // Linear predictor from the two previous states.
    StateField start = z;
    if (have_two) {
      y_axpy(1.0, z, start);
      y_axpy(-1.0, z_before, start);
    }

    auto [z_next, rep] = incremental_solve(z, h, &start);
    if (max_abs_trace_p(z_next) > 1e-12 * std::max(1.0, sup_norm(z_next)))
      throw SolveError("run: plastic trace drifted beyond tolerance at step " + std::to_string(n));

    full = slin_.system().solve_dirichlet(sym_field(state_p_block(z_next)), b_bar, {}, &warm_full_);
    warm_full_ = full.u;

    record(t, z_next, rep, last_sigma_lin_, full);
    if (observer) {
      StepView view{n, t, h, z, z_next, last_sigma_lin_, slin_.ell(), b_bar,
                    full.u, full.sigma, hat->sigma, hat->u, rep};
      if (!observer(view)) {
        traj.aborted = true;
        traj.aborted_at = n;
        z = std::move(z_next);
        return traj;
      }
    }

    z_before = z;
    have_two = true;
    z = std::move(z_next);
  }
  return traj;
}

namespace {

// Interpolant evaluation on (times[i], times[i+1]]; affine uses the chord,
// constant uses the right endpoint (the Rothe step value).
StateField eval_interpolant(const Trajectory& tr, double t, bool affine) {
  const auto& ts = tr.times;
  // slab (ts[hi-1], ts[hi]] so knot values come from the step that produced them
  auto it = std::lower_bound(ts.begin(), ts.end(), t);
  std::size_t hi = static_cast<std::size_t>(it - ts.begin());
  if (hi == 0) hi = 1;
  if (hi >= ts.size()) hi = ts.size() - 1;
  std::size_t lo = hi - 1;
  if (!affine) return tr.states[hi];
  double span = ts[hi] - ts[lo];
  double a = span > 0.0 ? (t - ts[lo]) / span : 1.0;
  StateField out = tr.states[lo];
  out *= (1.0 - a);
  y_axpy(a, tr.states[hi], out);
  return out;
}

void check_interpolant_args(const Trajectory& tr, double t) {
  if (tr.times.size() < 2 || tr.states.size() != tr.times.size())
    throw std::invalid_argument("interpolate: trajectory has no steps");
  double T = tr.times.back();
  if (!(t >= 0.0) || t > T * (1.0 + 1e-14))
    throw std::invalid_argument("interpolate: time outside [0, T]");
}

} // namespace

StateField interpolate_affine(const Trajectory& tr, double t) {
  check_interpolant_args(tr, t);
  if (t <= tr.times.front()) return tr.states.front();
  return eval_interpolant(tr, t, true);
}

StateField interpolate_constant(const Trajectory& tr, double t) {
  check_interpolant_args(tr, t);
  if (t <= tr.times.front()) return tr.states.front();
  return eval_interpolant(tr, t, false);
}

InterpolantNorms interpolant_lq_norms(const Grid& g, const Trajectory& tr, double q) {
  if (!(q >= 1.0)) throw std::invalid_argument("interpolant_lq_norms: q must be >= 1");
  if (tr.times.size() < 2 || tr.states.size() != tr.times.size())
    throw std::invalid_argument("interpolant_lq_norms: trajectory has no steps");

  static const double gx[5] = {-0.90617984593866396, -0.53846931010568311, 0.0,
                               0.53846931010568311, 0.90617984593866396};
  static const double gw[5] = {0.23692688505618911, 0.47862867049936647, 0.56888888888888889,
                               0.47862867049936647, 0.23692688505618911};

  double affine_pow = 0.0, constant_pow = 0.0;
  for (std::size_t n = 1; n < tr.times.size(); ++n) {
    const double s = tr.times[n - 1], e = tr.times[n];
    const double mid = 0.5 * (s + e), half = 0.5 * (e - s);
    for (int k = 0; k < 5; ++k) {
      double t = mid + half * gx[k];
      StateField v = eval_interpolant(tr, t, true);
      affine_pow += gw[k] * half * std::pow(norm2(g, v), q);
    }
    constant_pow += (e - s) * std::pow(norm2(g, tr.states[n]), q);
  }
  const double h = tr.times[1] - tr.times[0];
  InterpolantNorms out;
  out.affine = std::pow(affine_pow, 1.0 / q);
  out.constant = std::pow(constant_pow, 1.0 / q);
  out.constant_extended = std::pow(h * std::pow(norm2(g, tr.states.front()), q) + constant_pow, 1.0 / q);
  return out;
}

double trajectory_lq_distance(const Grid& g, const Trajectory& a, const Trajectory& b,
                              double q, bool affine) {
  if (!(q >= 1.0)) throw std::invalid_argument("trajectory_lq_distance: q must be >= 1");
  if (a.times.size() < 2 || b.times.size() < 2)
    throw std::invalid_argument("trajectory_lq_distance: trajectories need at least one step");
  double ta = a.times.back(), tb = b.times.back();
  if (std::abs(ta - tb) > 1e-12 * std::max(ta, tb))
    throw std::invalid_argument("trajectory_lq_distance: durations differ");

  std::vector<double> knots;
  knots.reserve(a.times.size() + b.times.size());
  knots.insert(knots.end(), a.times.begin(), a.times.end());
  knots.insert(knots.end(), b.times.begin(), b.times.end());
  std::sort(knots.begin(), knots.end());
  knots.erase(std::unique(knots.begin(), knots.end(),
                          [&](double x, double y) { return std::abs(x - y) <= 1e-14 * ta; }),
              knots.end());

  // Five-point Gauss-Legendre on [-1, 1].
  static const double gx[5] = {-0.90617984593866396, -0.53846931010568311, 0.0,
                               0.53846931010568311, 0.90617984593866396};
  static const double gw[5] = {0.23692688505618911, 0.47862867049936647, 0.56888888888888889,
                               0.47862867049936647, 0.23692688505618911};

  double total = 0.0;
  for (std::size_t i = 0; i + 1 < knots.size(); ++i) {
    double s = knots[i], e = knots[i + 1];
    double mid = 0.5 * (s + e), half = 0.5 * (e - s);
    if (half <= 0.0) continue;
    for (int k = 0; k < 5; ++k) {
      double t = mid + half * gx[k];
      StateField va = eval_interpolant(a, t, affine);
      StateField vb = eval_interpolant(b, t, affine);
      va -= vb;
      total += gw[k] * half * std::pow(norm2(g, va), q);
    }
  }
  return std::pow(total, 1.0 / q);
}

} // namespace gradplast
