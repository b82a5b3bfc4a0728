#pragma once

#include <cstdint>
#include <memory>
#include <stdexcept>
#include <string>

#include "gradplast/elasticity.hpp"
#include "gradplast/flow_rule.hpp"
#include "gradplast/grid.hpp"
#include "gradplast/rothe.hpp"

namespace gradplast {

/// Configuration failure with the offending line number baked into the
/// message ("line 12: ...").
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Complete description of a batch run, parsed from sectioned key-value
/// text. Every field has a documented nondimensional default so the empty
/// config is a valid smoke-test scenario.
struct Scenario {
  // [grid]
  std::size_t nx = 8, ny = 8, nz = 8;
  double lx = 1.0, ly = 1.0, lz = 1.0;

  // [material]
  double mu = 1.0;
  double lambda = 1.0;
  double k_iso = 0.1;
  double c1 = 0.1;  // non-negative curl penalty

  // [flow]
  std::string rule = "norton_hoff";  // norton_hoff | non_associative | softening_coupling
  double eta = 1.0;
  double rate_exponent = 1.0;
  double sigma_y = 0.1;
  double hardening_coupling = 0.5;  // kappa, feeds the yield activation
  double beta = 0.0;                // skew weight of the non-associative rule

  // [load]
  std::string preset = "uniaxial_ramp";  // zero | uniaxial_ramp | shear_ramp | load_unload
  double amplitude = 1.0;
  double total_time = 1.0;

  // [solver]
  std::size_t level = 5;  // 2^level time steps
  double eps_reg = 1e-6;
  double newton_tol = 1e-11;
  std::uint64_t seed = 0;

  bool operator==(const Scenario&) const = default;

  std::size_t steps() const { return std::size_t{1} << level; }

  Grid make_grid() const;
  ElasticTensor make_tensor(const Grid& g) const;
  HardeningMap make_hardening() const;
  std::unique_ptr<FlowRule> make_rule() const;
  RotheOptions make_options() const;
  /// Body-force program b(x, t), piecewise affine in t on [0, total_time].
  RotheScheme::LoadFn make_load(const Grid& g) const;
};

/// Parses sectioned key-value text (UTF-8, '#' comments). Unknown sections
/// or keys, malformed values, and invariant violations throw ConfigError
/// with the line number.
Scenario parse_scenario(const std::string& text);

Scenario load_scenario_file(const std::string& path);

/// Canonical emission: every key in a fixed order, doubles at full
/// precision. parse_scenario(canonical_config(s)) == s.
std::string canonical_config(const Scenario& s);

}  // namespace gradplast
