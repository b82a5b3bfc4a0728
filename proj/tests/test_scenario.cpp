#include <doctest.h>

#include <cmath>
#include <sstream>
#include <string>

#include "gradplast/csv.hpp"
#include "gradplast/diagnostics.hpp"
#include "gradplast/scenario.hpp"

using namespace gradplast;

namespace {

std::string message_of(const std::string& text) {
  try {
    parse_scenario(text);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return {};
}

}  // namespace

TEST_CASE("empty config yields the documented defaults") {
  Scenario s = parse_scenario("");
  CHECK(s.nx == 8);
  CHECK(s.lx == 1.0);
  CHECK(s.mu == 1.0);
  CHECK(s.lambda == 1.0);
  CHECK(s.k_iso == 0.1);
  CHECK(s.c1 == 0.1);
  CHECK(s.rule == "norton_hoff");
  CHECK(s.eta == 1.0);
  CHECK(s.rate_exponent == 1.0);
  CHECK(s.sigma_y == 0.1);
  CHECK(s.hardening_coupling == 0.5);
  CHECK(s.preset == "uniaxial_ramp");
  CHECK(s.total_time == 1.0);
  CHECK(s.level == 5);
  CHECK(s.steps() == 32);
  CHECK(s.eps_reg == 1e-6);
  CHECK(s.newton_tol == 1e-11);
  CHECK(s.seed == 0);
}

TEST_CASE("parser reads sections, comments, and a byte order mark") {
  const std::string text =
      "\xEF\xBB\xBF# leading comment\n"
      "\n"
      "[grid]\n"
      "nx = 5   # inline comment\n"
      "  ny=6\n"
      "\n"
      "[solver]\n"
      "level = 3\n"
      "seed = 42\n";
  Scenario s = parse_scenario(text);
  CHECK(s.nx == 5);
  CHECK(s.ny == 6);
  CHECK(s.nz == 8);
  CHECK(s.level == 3);
  CHECK(s.seed == 42);
}

TEST_CASE("configuration errors carry line numbers") {
  SUBCASE("unknown key") {
    std::string m = message_of("[grid]\nwidth = 3\n");
    CHECK(m.find("line 2") != std::string::npos);
    CHECK(m.find("width") != std::string::npos);
  }
  SUBCASE("unknown section") {
    std::string m = message_of("\n\n[mesh]\n");
    CHECK(m.find("line 3") != std::string::npos);
    CHECK(m.find("mesh") != std::string::npos);
  }
  SUBCASE("key before any section") {
    std::string m = message_of("nx = 4\n");
    CHECK(m.find("line 1") != std::string::npos);
    CHECK(m.find("before any section") != std::string::npos);
  }
  SUBCASE("negative curl penalty cites the rule") {
    std::string m = message_of("[material]\nc1 = -1\n");
    CHECK(m.find("line 2") != std::string::npos);
    CHECK(m.find("non-negative") != std::string::npos);
  }
  SUBCASE("malformed number") {
    std::string m = message_of("[material]\nmu = fast\n");
    CHECK(m.find("line 2") != std::string::npos);
    CHECK(m.find("not a number") != std::string::npos);
  }
  SUBCASE("bad preset and bad rule") {
    CHECK(message_of("[load]\npreset = pull\n").find("unknown load preset") !=
          std::string::npos);
    CHECK(message_of("[flow]\nrule = tresca\n").find("unknown flow rule") !=
          std::string::npos);
  }
  SUBCASE("grid dimension bounds") {
    CHECK(message_of("[grid]\nnx = 1\n").find("[2, 4096]") != std::string::npos);
    CHECK(message_of("[solver]\nlevel = 30\n").find("at most 20") != std::string::npos);
  }
  SUBCASE("negative integer rejected") {
    CHECK(message_of("[solver]\nseed = -3\n").find("non-negative integer") !=
          std::string::npos);
  }
}

TEST_CASE("canonical emission round-trips to the identical scenario") {
  Scenario s;
  s.nx = 6;
  s.ny = 7;
  s.nz = 9;
  s.lx = 1.25;
  s.mu = 0.7;
  s.lambda = 1.9;
  s.c1 = 0.0;
  s.rule = "non_associative";
  s.beta = 0.125;
  s.eta = 2.5;
  s.rate_exponent = 1.5;
  s.sigma_y = 0.2;
  s.preset = "load_unload";
  s.amplitude = -0.75;
  s.total_time = 2.0;
  s.level = 4;
  s.eps_reg = 1e-4;
  s.seed = 1234567;

  const std::string text = canonical_config(s);
  Scenario back = parse_scenario(text);
  CHECK(back == s);
  CHECK(canonical_config(back) == text);

  SUBCASE("awkward doubles survive the trip") {
    Scenario t;
    t.mu = 0.1;                 // not representable exactly
    t.lambda = 3.0e-17;
    t.amplitude = -1.0 / 3.0;
    Scenario again = parse_scenario(canonical_config(t));
    CHECK(again == t);
  }
}

TEST_CASE("load presets are piecewise affine with the advertised shapes") {
  Scenario s;
  s.nx = s.ny = s.nz = 4;
  s.amplitude = 2.0;
  s.total_time = 2.0;
  Grid g = s.make_grid();

  SUBCASE("zero") {
    s.preset = "zero";
    auto load = s.make_load(g);
    VectorField b = load(1.3);
    for (std::size_t n = 0; n < g.node_count(); ++n)
      for (int d = 0; d < 3; ++d) CHECK(b(n, d) == 0.0);
  }
  SUBCASE("uniaxial ramp") {
    s.preset = "uniaxial_ramp";
    auto load = s.make_load(g);
    VectorField b = load(0.5);
    for (std::size_t n = 0; n < g.node_count(); ++n) {
      CHECK(b(n, 0) == 0.0);
      CHECK(b(n, 1) == 0.0);
      CHECK(b(n, 2) == doctest::Approx(2.0 * 0.25).epsilon(1e-15));
    }
  }
  SUBCASE("shear ramp is odd across the midplane") {
    s.preset = "shear_ramp";
    auto load = s.make_load(g);
    VectorField b = load(1.0);
    for (std::size_t i = 0; i < 4; ++i)
      for (std::size_t j = 0; j < 4; ++j)
        for (std::size_t k = 0; k < 4; ++k) {
          const std::size_t n = g.index(i, j, k);
          const std::size_t m = g.index(i, j, 3 - k);
          CHECK(b(n, 0) == doctest::Approx(-b(m, 0)).epsilon(1e-15));
          CHECK(b(n, 1) == 0.0);
          CHECK(b(n, 2) == 0.0);
        }
    // linear in t
    VectorField h = load(0.5);
    for (std::size_t n = 0; n < g.node_count(); ++n)
      CHECK(h(n, 0) == doctest::Approx(0.5 * b(n, 0)).epsilon(1e-15));
  }
  SUBCASE("load-unload program has the advertised kinks") {
    s.preset = "load_unload";
    auto load = s.make_load(g);
    auto phi = [&](double t) { return load(t)(0, 2) / s.amplitude; };
    CHECK(phi(0.0) == 0.0);
    CHECK(phi(1.0) == doctest::Approx(1.0).epsilon(1e-15));            // T/2
    CHECK(phi(1.5) == doctest::Approx(0.5).epsilon(1e-15));            // 3T/4
    CHECK(phi(2.0) == doctest::Approx(0.5).epsilon(1e-15));            // hold
    CHECK(phi(0.5) == doctest::Approx(0.5).epsilon(1e-15));            // ramp up
    CHECK(phi(1.25) == doctest::Approx(0.75).epsilon(1e-15));          // ramp down
    // affine inside each segment: midpoint value is the chord average
    CHECK(phi(0.7) == doctest::Approx(0.5 * (phi(0.6) + phi(0.8))).epsilon(1e-13));
    CHECK(phi(1.7) == phi(1.9));
  }
}

TEST_CASE("scenario factories build consistent objects") {
  Scenario s;
  s.nx = s.ny = s.nz = 4;
  Grid g = s.make_grid();
  CHECK(g.node_count() == 64);
  CHECK(g.volume() == doctest::Approx(1.0).epsilon(1e-15));

  auto rule = s.make_rule();
  CHECK(rule->name() == "norton_hoff");
  CHECK(rule->has_potential());

  s.rule = "non_associative";
  s.beta = 0.2;
  CHECK(s.make_rule()->name() == "non_associative");
  CHECK(!s.make_rule()->has_potential());

  s.rule = "softening_coupling";
  CHECK(s.make_rule()->name() == "softening_coupling");

  HardeningMap hard = s.make_hardening();
  CHECK(hard.is_isotropic());
  CHECK(hard.k_iso() == 0.1);

  RotheOptions opts = s.make_options();
  CHECK(opts.newton_tol == s.newton_tol);
}

TEST_CASE("csv numbers round-trip at full precision") {
  CHECK(csv_number(std::nan("")) == "n/a");
  CHECK(csv_number(1.0) == "1");
  CHECK(csv_number(-0.5) == "-0.5");
  const double vals[] = {0.1, -1.0 / 3.0, 2.5e-308, 1.7976931348623157e308, 3.0e-17};
  for (double v : vals) {
    const std::string s = csv_number(v);
    CHECK(std::stod(s) == v);
  }
  CHECK(csv_quote("plain") == "plain");
  CHECK(csv_quote("a,b") == "\"a,b\"");
  CHECK(csv_quote("say \"hi\"") == "\"say \"\"hi\"\"\"");
}

TEST_CASE("ledger csv has the tagged header and n/a entries") {
  std::vector<LedgerRow> rows(2);
  rows[0].step = 0;
  rows[1].step = 1;
  rows[1].time = 0.5;
  rows[1].lhs56 = std::nan("");
  rows[1].slack51 = 0.25;

  std::ostringstream out;
  write_ledger_csv(out, rows);
  const std::string text = out.str();

  std::istringstream lines(text);
  std::string header;
  std::getline(lines, header);
  CHECK(header.substr(0, 5) == "step,");
  CHECK(header.find("eq51_lhs") != std::string::npos);
  CHECK(header.find("eq52_eps_young") != std::string::npos);
  CHECK(header.find("eq56_lhs") != std::string::npos);
  CHECK(header.find("eq69_potential") != std::string::npos);
  CHECK(header.find("eq78_lhs") != std::string::npos);
  CHECK(header.find("eq9_min_pointwise") != std::string::npos);
  // 33 columns -> 32 separators per line
  std::size_t commas = 0;
  for (char c : header)
    if (c == ',') ++commas;
  CHECK(commas == kLedgerColumns - 1);

  std::string row0, row1;
  std::getline(lines, row0);
  std::getline(lines, row1);
  CHECK(row1.find("n/a") != std::string::npos);
  CHECK(row1.substr(0, 6) == "1,0.5,");

  std::ostringstream again;
  write_ledger_csv(again, rows);
  CHECK(again.str() == text);  // deterministic bytes
}

TEST_CASE("field csv carries node index, coordinates, and components") {
  Grid g = Grid::box(3, 3, 3, 2.0, 2.0, 2.0);
  StateField z(g);
  const std::size_t node = g.index(1, 2, 0);
  z(node, 3) = 0.25;
  z(node, 9) = 1.5;

  std::ostringstream out;
  write_state_field_csv(out, g, z);
  std::istringstream lines(out.str());
  std::string line;
  std::getline(lines, line);
  CHECK(line == "node,x,y,z,p00,p01,p02,p10,p11,p12,p20,p21,p22,gamma");
  for (std::size_t n = 0; n <= node; ++n) std::getline(lines, line);
  CHECK(line == "7,1,2,0,0,0,0,0.25,0,0,0,0,0,1.5");

  std::ostringstream vout;
  VectorField v(g);
  v(0, 1) = -2.0;
  write_vector_field_csv(vout, g, v);
  CHECK(vout.str().find("0,0,0,0,0,-2,0\n") != std::string::npos);
}

TEST_CASE("vtk tensor snapshot is well formed") {
  Grid g = Grid::box(3, 4, 5, 1.0, 1.0, 1.0);
  MatrixField f(g);
  for (std::size_t n = 0; n < g.node_count(); ++n) f(n, 0) = static_cast<double>(n);

  std::ostringstream out;
  write_vtk_tensor(out, g, f, "plastic_distortion");
  const std::string text = out.str();
  CHECK(text.find("# vtk DataFile Version 3.0\n") == 0);
  CHECK(text.find("DATASET STRUCTURED_POINTS\n") != std::string::npos);
  CHECK(text.find("DIMENSIONS 3 4 5\n") != std::string::npos);
  CHECK(text.find("POINT_DATA 60\n") != std::string::npos);
  CHECK(text.find("TENSORS plastic_distortion double\n") != std::string::npos);

  // 60 nodes, 3 rows each plus a blank separator
  std::size_t blank = 0;
  std::istringstream lines(text);
  std::string line;
  while (std::getline(lines, line))
    if (line.empty()) ++blank;
  CHECK(blank == 60);
}

TEST_CASE("convergence and korn tables serialize") {
  ConvergenceTable t;
  t.step_counts = {4, 8, 16};
  t.time_differences = {0.5, 0.2};
  t.time_monotone = true;
  t.final_ratio = 0.4;
  t.eps_values = {1e-2, 1e-4};
  t.eps_differences = {0.125};
  std::ostringstream out;
  write_convergence_csv(out, t);
  const std::string text = out.str();
  CHECK(text.find("kind,index,parameter,difference\n") == 0);
  CHECK(text.find("time,0,8,0.5\n") != std::string::npos);
  CHECK(text.find("time,1,16," + csv_number(0.2) + "\n") != std::string::npos);
  CHECK(text.find("eps,0," + csv_number(1e-4) + ",0.125\n") != std::string::npos);

  KornStatistics st;
  st.samples = 10;
  st.rejected = 1;
  st.max_ratio = 2.5;
  st.mean_ratio = 1.25;
  st.max_ratio_optimized = 3.0;
  std::ostringstream kout;
  write_korn_csv(kout, st);
  CHECK(kout.str().find("10,1,2.5,1.25,3,0\n") != std::string::npos);
}
