#include <algorithm>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "gradplast/csv.hpp"
#include "gradplast/curl.hpp"
#include "gradplast/diagnostics.hpp"
#include "gradplast/elasticity.hpp"
#include "gradplast/fields.hpp"
#include "gradplast/flow_rule.hpp"
#include "gradplast/grid.hpp"
#include "gradplast/rothe.hpp"
#include "gradplast/scenario.hpp"

namespace fs = std::filesystem;
using namespace gradplast;

namespace {

struct CommonArgs {
  std::string config;
  std::string out;
  bool strict = false;
  long long seed = -1;  // >= 0 overrides the config seed
};

Scenario load_scenario(const CommonArgs& a) {
  Scenario sc = load_scenario_file(a.config);
  if (a.seed >= 0) sc.seed = static_cast<std::uint64_t>(a.seed);
  return sc;
}

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
  out << content;
  if (!out) throw std::runtime_error("write failed for '" + path.string() + "'");
}

fs::path prepare_out(const CommonArgs& a, const Scenario& sc) {
  fs::path dir(a.out);
  fs::create_directories(dir);
  write_file(dir / "config.ini", canonical_config(sc));
  return dir;
}

std::size_t env_workers(std::size_t jobs) {
  std::size_t hw = std::thread::hardware_concurrency();
  if (hw == 0) hw = 1;
  std::size_t workers = std::min(jobs, std::min<std::size_t>(hw, 4));
  if (const char* cap = std::getenv("GRADPLAST_THREADS")) {
    char* end = nullptr;
    unsigned long v = std::strtoul(cap, &end, 10);
    if (end != cap && v >= 1) workers = std::min<std::size_t>(workers, v);
  }
  return std::max<std::size_t>(workers, 1);
}

std::string state_vec_line(const StateVec& v) {
  std::ostringstream out;
  for (int i = 0; i < kStateDim; ++i) {
    if (i) out << ' ';
    out << csv_number(v[i]);
  }
  return out.str();
}

void describe(std::ostream& s, const Scenario& sc) {
  s << "scenario: grid " << sc.nx << "x" << sc.ny << "x" << sc.nz << ", rule " << sc.rule
    << ", preset " << sc.preset << ", amplitude " << csv_number(sc.amplitude) << ", T "
    << csv_number(sc.total_time) << ", steps " << sc.steps() << "\n"
    << "material: mu " << csv_number(sc.mu) << ", lambda " << csv_number(sc.lambda)
    << ", k_iso " << csv_number(sc.k_iso) << ", c1 " << csv_number(sc.c1) << ", eps_reg "
    << csv_number(sc.eps_reg) << ", seed " << sc.seed << "\n";
}

int cmd_run(const CommonArgs& a, bool allow_incompatible, bool vtk) {
  Scenario sc = load_scenario(a);
  fs::path dir = prepare_out(a, sc);

  Grid g = sc.make_grid();
  ElasticTensor tensor = sc.make_tensor(g);
  ElasticSystem sys(g, tensor);
  CurlOperator curl(g);
  HardeningMap hard = sc.make_hardening();
  std::unique_ptr<FlowRule> rule = sc.make_rule();
  auto load = sc.make_load(g);

  std::ostringstream sum;
  describe(sum, sc);
  bool strict_fail = false;

  // admissibility gate: the rate map must be monotone before a long march
  MonotonicityReport mono =
      check_monotonicity(*rule, 2000, sc.seed, sc.sigma_y, sc.hardening_coupling);
  sum << "monotonicity: samples " << mono.samples << ", violations " << mono.violations
      << ", worst slack " << csv_number(mono.worst_slack) << "\n";
  if (!mono.passed()) {
    sum << "monotonicity witness a: " << state_vec_line(mono.witness_a) << "\n"
        << "monotonicity witness b: " << state_vec_line(mono.witness_b) << "\n";
    if (a.strict) {
      sum << "verdict: FAIL (rate map not monotone)\n";
      write_file(dir / "summary.txt", sum.str());
      std::cerr << "strict: monotonicity violated, witness written to summary" << std::endl;
      return 1;
    }
    sum << "warning: proceeding with a non-monotone rate map\n";
  }

  // compatible start: zero plastic flow at the initial load
  ElasticResult init = sys.solve_dirichlet(MatrixField(g), load(0.0));
  CompatibilityReport compat = check_initial_compatibility(*rule, embed_matrix(init.sigma));
  sum << "initial compatibility: max overstress " << csv_number(compat.max_overstress)
      << ", active nodes " << compat.active_nodes << "\n";
  if (!compat.compatible(1e-12)) {
    if (!allow_incompatible) {
      sum << "verdict: REFUSED (initial load already beyond yield; rerun with "
             "--allow-incompatible to override)\n";
      write_file(dir / "summary.txt", sum.str());
      std::cerr << "initial state incompatible (max overstress "
                << csv_number(compat.max_overstress) << "); refusing to start" << std::endl;
      return 1;
    }
    sum << "warning: incompatible initial state overridden\n";
  }

  EnergyLedger ledger(sys, curl, hard, *rule, sc.c1, sc.eps_reg);
  RotheScheme scheme(sys, curl, hard, *rule, sc.c1, sc.eps_reg, sc.make_options());
  const bool strict = a.strict;
  auto observer = [&](const StepView& v) {
    const bool ok = ledger.push(v);
    return ok || !strict;
  };
  Trajectory tr = scheme.run(load, StateField(g), sc.total_time, sc.steps(), true, observer);

  write_file(dir / "ledger.csv", [&] {
    std::ostringstream out;
    write_ledger_csv(out, ledger.rows());
    return out.str();
  }());

  const StateField& zT = tr.states.back();
  {
    std::ostringstream out;
    write_state_field_csv(out, g, zT);
    write_file(dir / "state_final.csv", out.str());
  }
  {
    std::ostringstream out;
    write_matrix_field_csv(out, g, tr.sigma.back());
    write_file(dir / "sigma_final.csv", out.str());
  }
  {
    std::ostringstream out;
    write_vector_field_csv(out, g, tr.u.back());
    write_file(dir / "displacement_final.csv", out.str());
  }
  if (vtk) {
    std::ostringstream out;
    write_vtk_tensor(out, g, state_p_block(zT), "plastic_distortion");
    write_file(dir / "state_final.vtk", out.str());
    std::ostringstream sout;
    write_vtk_tensor(sout, g, tr.sigma.back(), "stress");
    write_file(dir / "sigma_final.vtk", sout.str());
  }

  sum << "run: completed steps " << tr.step_count() << " of " << sc.steps()
      << (tr.aborted ? " (aborted by strict ledger gate)" : "") << "\n";
  const double zn = norm2(g, zT);
  sum << "final |z| " << csv_number(zn) << ", |sigma| " << csv_number(norm2(g, tr.sigma.back()))
      << ", |u| " << csv_number(norm2(g, tr.u.back())) << "\n";
  if (sup_norm(zT) == 0.0) sum << "state: z = 0 everywhere (purely elastic run)\n";

  sum << "ledger: rows " << ledger.rows().size() << ", failures " << ledger.failures()
      << ", tolerance " << csv_number(ledger.tol_energy()) << ", passed "
      << (ledger.passed() ? "yes" : "no") << "\n";
  if (!ledger.rows().empty()) {
    const LedgerRow& last = ledger.rows().back();
    sum << "energy: elastic " << csv_number(0.5 * last.elastic) << ", hardening "
        << csv_number(0.5 * last.hardening) << ", curl " << csv_number(0.5 * last.curl)
        << ", cumulative dissipation " << csv_number(last.cum_dissipation) << "\n";
  }

  if (!tr.aborted) {
    DissipationReport diss =
        dissipation_check(sys, curl, hard, *rule, sc.c1, sc.eps_reg, tr, ledger.tol_energy());
    sum << "dissipation: violations " << diss.violations << ", min step "
        << csv_number(diss.min_step) << ", min pointwise " << csv_number(diss.min_pointwise)
        << ", max imbalance " << csv_number(diss.max_imbalance) << "\n";
    if (strict && !diss.passed()) strict_fail = true;
  }

  if (strict && (tr.aborted || !ledger.passed())) strict_fail = true;
  sum << "verdict: " << (strict_fail ? "FAIL" : "OK") << "\n";
  write_file(dir / "summary.txt", sum.str());
  return strict_fail ? 1 : 0;
}

int cmd_converge(const CommonArgs& a, std::size_t levels, const std::vector<double>& sweep) {
  Scenario sc = load_scenario(a);
  fs::path dir = prepare_out(a, sc);

  Grid g = sc.make_grid();
  ElasticTensor tensor = sc.make_tensor(g);
  ElasticSystem sys(g, tensor);
  CurlOperator curl(g);
  HardeningMap hard = sc.make_hardening();
  std::unique_ptr<FlowRule> rule = sc.make_rule();

  const std::size_t workers = env_workers(std::max(levels, sweep.size()));
  ConvergenceTable table =
      convergence_study(sys, curl, hard, *rule, sc.c1, sc.eps_reg, sc.make_options(),
                        sc.make_load(g), StateField(g), sc.total_time, sc.steps(), levels,
                        sweep, workers);

  std::ostringstream out;
  write_convergence_csv(out, table);
  write_file(dir / "convergence.csv", out.str());

  std::ostringstream sum;
  describe(sum, sc);
  sum << "levels: " << levels << " (steps";
  for (std::size_t n : table.step_counts) sum << ' ' << n;
  sum << "), workers " << workers << "\n";
  sum << "time refinement: monotone " << (table.time_monotone ? "yes" : "no")
      << ", final ratio " << csv_number(table.final_ratio) << "\n";
  if (!sweep.empty())
    sum << "eps sweep: monotone " << (table.eps_monotone ? "yes" : "no") << "\n";

  bool fail = a.strict && (!table.time_monotone || table.final_ratio > 0.9 ||
                           (!sweep.empty() && !table.eps_monotone));
  sum << "verdict: " << (fail ? "FAIL" : "OK") << "\n";
  write_file(dir / "summary.txt", sum.str());
  return fail ? 1 : 0;
}

int cmd_korn(const CommonArgs& a, std::size_t samples, std::size_t starts, std::size_t iters) {
  Scenario sc = load_scenario(a);
  fs::path dir = prepare_out(a, sc);

  Grid g = sc.make_grid();
  CurlOperator curl(g);
  KornStatistics st = korn_probe(g, curl, samples, starts, iters, sc.seed);

  std::ostringstream out;
  write_korn_csv(out, st);
  write_file(dir / "korn.csv", out.str());

  std::ostringstream sum;
  describe(sum, sc);
  sum << "korn probe: samples " << st.samples << ", rejected " << st.rejected
      << ", max ratio " << csv_number(st.max_ratio) << ", mean ratio "
      << csv_number(st.mean_ratio) << ", ascent max " << csv_number(st.max_ratio_optimized)
      << ", degenerate " << (st.degenerate_found ? "yes" : "no") << "\n";
  bool fail = a.strict && st.degenerate_found;
  sum << "verdict: " << (fail ? "FAIL" : "OK") << "\n";
  write_file(dir / "summary.txt", sum.str());
  return fail ? 1 : 0;
}

int cmd_validate_flow(const CommonArgs& a, std::size_t samples) {
  Scenario sc = load_scenario(a);
  fs::path dir = prepare_out(a, sc);

  std::unique_ptr<FlowRule> rule = sc.make_rule();
  HardeningMap hard = sc.make_hardening();

  std::ostringstream rep;
  describe(rep, sc);
  bool fail = false;

  const StateVec zero{};
  const double g0 = state_norm(rule->eval(zero));
  rep << "origin: |g(0)| = " << csv_number(g0) << "\n";
  if (g0 != 0.0) fail = true;

  MonotonicityReport mono =
      check_monotonicity(*rule, samples, sc.seed, sc.sigma_y, sc.hardening_coupling);
  rep << "monotonicity: samples " << mono.samples << ", violations " << mono.violations
      << ", worst slack " << csv_number(mono.worst_slack) << "\n";
  if (!mono.passed()) {
    rep << "monotonicity witness a: " << state_vec_line(mono.witness_a) << "\n"
        << "monotonicity witness b: " << state_vec_line(mono.witness_b) << "\n";
    fail = true;
  }

  try {
    GrowthCertificate cert = rule->certificate();
    GrowthReport growth =
        check_growth(*rule, cert, samples, sc.seed, sc.sigma_y, sc.hardening_coupling);
    rep << "growth certificate: q " << csv_number(cert.q) << ", alpha "
        << csv_number(cert.alpha) << ", m " << csv_number(cert.m) << "\n";
    rep << "growth: samples " << growth.samples << ", joint/growth/coercive violations "
        << growth.violations_joint << "/" << growth.violations_growth << "/"
        << growth.violations_coercive << ", worst margins " << csv_number(growth.worst_joint)
        << " " << csv_number(growth.worst_growth) << " " << csv_number(growth.worst_coercive)
        << "\n";
    if (!growth.passed()) fail = true;
  } catch (const std::exception& e) {
    rep << "growth certificate: unavailable (" << e.what() << ")\n";
  }

  if (rule->has_potential()) {
    PotentialReport pot =
        check_potential_gradient(*rule, std::min<std::size_t>(samples, 500), sc.seed,
                                 sc.sigma_y, sc.hardening_coupling);
    rep << "potential gradient: samples " << pot.samples << ", skipped " << pot.skipped
        << ", max relative error " << csv_number(pot.max_rel_error) << "\n";
    if (pot.max_rel_error > 1e-5) fail = true;
  } else {
    rep << "potential gradient: rule has no potential\n";
  }

  SelfControlReport ctl = check_self_controlling(*rule, hard, std::min<std::size_t>(samples, 2000),
                                                 sc.seed, sc.sigma_y, sc.hardening_coupling);
  if (ctl.applicable)
    rep << "self-control: |Bg| <= " << csv_number(ctl.c1) << " |Lg| + " << csv_number(ctl.c0)
        << ", max excess " << csv_number(ctl.max_residual) << ", samples " << ctl.samples
        << "\n";
  else
    rep << "self-control: not applicable (hardening rate vanishes on plastic flow)\n";

  rep << "verdict: " << (a.strict && fail ? "FAIL" : "OK") << "\n";
  write_file(dir / "flow_report.txt", rep.str());
  write_file(dir / "summary.txt", rep.str());
  return a.strict && fail ? 1 : 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"quasistatic gradient viscoplasticity batch runner"};
  app.require_subcommand(1);

  CommonArgs args;
  bool allow_incompatible = false, vtk = false;
  std::size_t levels = 3, korn_samples = 500, korn_starts = 50, korn_iters = 60;
  std::size_t flow_samples = 10000;
  std::vector<double> eps_sweep;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--config", args.config, "scenario config file")->required();
    cmd->add_option("--out", args.out, "output directory")->required();
    cmd->add_flag("--strict", args.strict, "nonzero exit when any check fails");
    cmd->add_option("--seed", args.seed, "override the config seed");
  };

  CLI::App* run = app.add_subcommand("run", "march the scenario and write ledger + fields");
  add_common(run);
  run->add_flag("--allow-incompatible", allow_incompatible,
                "start even when the initial load is beyond yield");
  run->add_flag("--vtk", vtk, "also write legacy-VTK tensor snapshots");

  CLI::App* conv = app.add_subcommand("converge", "time-step refinement study");
  add_common(conv);
  conv->add_option("--levels", levels, "number of refinement levels (runs)")
      ->check(CLI::Range(std::size_t{2}, std::size_t{8}));
  conv->add_option("--eps-sweep", eps_sweep, "regularization values for the eps study");

  CLI::App* korn = app.add_subcommand("korn", "curl-rigidity ratio probe");
  add_common(korn);
  korn->add_option("--samples", korn_samples, "random candidate fields");
  korn->add_option("--ascent-starts", korn_starts, "projected-ascent restarts");
  korn->add_option("--ascent-iterations", korn_iters, "ascent steps per restart");

  CLI::App* flow = app.add_subcommand("validate-flow", "rate-map structure checks");
  add_common(flow);
  flow->add_option("--samples", flow_samples, "sampled dual states per check");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) return cmd_run(args, allow_incompatible, vtk);
    if (conv->parsed()) return cmd_converge(args, levels, eps_sweep);
    if (korn->parsed()) return cmd_korn(args, korn_samples, korn_starts, korn_iters);
    if (flow->parsed()) return cmd_validate_flow(args, flow_samples);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << std::endl;
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << std::endl;
    return 3;
  }
  return 2;
}
