#include "gradplast/scenario.hpp"

#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

namespace gradplast {

namespace {

std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return {};
  std::size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

[[noreturn]] void fail(std::size_t line, const std::string& what) {
  throw ConfigError("line " + std::to_string(line) + ": " + what);
}

double parse_double(const std::string& v, std::size_t line, const std::string& key) {
  errno = 0;
  char* end = nullptr;
  double x = std::strtod(v.c_str(), &end);
  if (end != v.c_str() + v.size() || v.empty() || errno == ERANGE)
    fail(line, "value '" + v + "' for " + key + " is not a number");
  return x;
}

std::uint64_t parse_uint(const std::string& v, std::size_t line, const std::string& key) {
  errno = 0;
  char* end = nullptr;
  unsigned long long x = std::strtoull(v.c_str(), &end, 10);
  if (end != v.c_str() + v.size() || v.empty() || errno == ERANGE ||
      v.find('-') != std::string::npos)
    fail(line, "value '" + v + "' for " + key + " is not a non-negative integer");
  return static_cast<std::uint64_t>(x);
}

using Setter = std::function<void(Scenario&, const std::string&, std::size_t)>;

Setter num(double Scenario::* f) {
  return [f](Scenario& s, const std::string& v, std::size_t line) {
    s.*f = parse_double(v, line, "this key");
  };
}

Setter pos(double Scenario::* f, const char* key) {
  return [f, key](Scenario& s, const std::string& v, std::size_t line) {
    double x = parse_double(v, line, key);
    if (!(x > 0.0)) fail(line, std::string(key) + " must be positive");
    s.*f = x;
  };
}

Setter nonneg(double Scenario::* f, const char* key) {
  return [f, key](Scenario& s, const std::string& v, std::size_t line) {
    double x = parse_double(v, line, key);
    if (!(x >= 0.0)) fail(line, std::string(key) + " must be non-negative");
    s.*f = x;
  };
}

Setter dim(std::size_t Scenario::* f, const char* key) {
  return [f, key](Scenario& s, const std::string& v, std::size_t line) {
    std::uint64_t x = parse_uint(v, line, key);
    if (x < 2 || x > 4096) fail(line, std::string(key) + " must be in [2, 4096]");
    s.*f = static_cast<std::size_t>(x);
  };
}

const std::map<std::string, std::map<std::string, Setter>>& key_table() {
  static const std::map<std::string, std::map<std::string, Setter>> table = {
      {"grid",
       {{"nx", dim(&Scenario::nx, "nx")},
        {"ny", dim(&Scenario::ny, "ny")},
        {"nz", dim(&Scenario::nz, "nz")},
        {"lx", pos(&Scenario::lx, "lx")},
        {"ly", pos(&Scenario::ly, "ly")},
        {"lz", pos(&Scenario::lz, "lz")}}},
      {"material",
       {{"mu", pos(&Scenario::mu, "mu")},
        {"lambda", nonneg(&Scenario::lambda, "lambda")},
        {"k_iso", nonneg(&Scenario::k_iso, "k_iso")},
        {"c1",
         [](Scenario& s, const std::string& v, std::size_t line) {
           double x = parse_double(v, line, "c1");
           if (!(x >= 0.0)) fail(line, "c1 must be non-negative (curl penalty constant)");
           s.c1 = x;
         }}}},
      {"flow",
       {{"rule",
         [](Scenario& s, const std::string& v, std::size_t line) {
           if (v != "norton_hoff" && v != "non_associative" && v != "softening_coupling")
             fail(line, "unknown flow rule '" + v + "'");
           s.rule = v;
         }},
        {"eta", pos(&Scenario::eta, "eta")},
        {"rate_exponent", pos(&Scenario::rate_exponent, "rate_exponent")},
        {"sigma_y", nonneg(&Scenario::sigma_y, "sigma_y")},
        {"hardening_coupling", nonneg(&Scenario::hardening_coupling, "hardening_coupling")},
        {"beta", num(&Scenario::beta)}}},
      {"load",
       {{"preset",
         [](Scenario& s, const std::string& v, std::size_t line) {
           if (v != "zero" && v != "uniaxial_ramp" && v != "shear_ramp" && v != "load_unload")
             fail(line, "unknown load preset '" + v + "'");
           s.preset = v;
         }},
        {"amplitude", num(&Scenario::amplitude)},
        {"total_time", pos(&Scenario::total_time, "total_time")}}},
      {"solver",
       {{"level",
         [](Scenario& s, const std::string& v, std::size_t line) {
           std::uint64_t x = parse_uint(v, line, "level");
           if (x > 20) fail(line, "level must be at most 20");
           s.level = static_cast<std::size_t>(x);
         }},
        {"eps_reg", nonneg(&Scenario::eps_reg, "eps_reg")},
        {"newton_tol", pos(&Scenario::newton_tol, "newton_tol")},
        {"seed",
         [](Scenario& s, const std::string& v, std::size_t line) {
           s.seed = parse_uint(v, line, "seed");
         }}}},
  };
  return table;
}

}  // namespace

Scenario parse_scenario(const std::string& text) {
  Scenario s;
  const auto& table = key_table();
  std::istringstream in(text);
  std::string raw;
  std::string section;
  const std::map<std::string, Setter>* keys = nullptr;
  std::size_t lineno = 0;
  while (std::getline(in, raw)) {
    ++lineno;
    if (lineno == 1 && raw.size() >= 3 && raw.compare(0, 3, "\xEF\xBB\xBF") == 0)
      raw.erase(0, 3);  // UTF-8 byte order mark
    std::string line = trim(raw);
    std::size_t hash = line.find('#');
    if (hash != std::string::npos) line = trim(line.substr(0, hash));
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') fail(lineno, "malformed section header '" + line + "'");
      section = trim(line.substr(1, line.size() - 2));
      auto it = table.find(section);
      if (it == table.end()) fail(lineno, "unknown section [" + section + "]");
      keys = &it->second;
      continue;
    }
    std::size_t eq = line.find('=');
    if (eq == std::string::npos) fail(lineno, "expected 'key = value', got '" + line + "'");
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (key.empty()) fail(lineno, "empty key");
    if (!keys) fail(lineno, "key '" + key + "' before any section header");
    auto it = keys->find(key);
    if (it == keys->end()) fail(lineno, "unknown key '" + key + "' in section [" + section + "]");
    it->second(s, value, lineno);
  }
  return s;
}

Scenario load_scenario_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_scenario(buf.str());
}

namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

std::string canonical_config(const Scenario& s) {
  std::ostringstream out;
  out << "[grid]\n"
      << "nx = " << s.nx << "\n"
      << "ny = " << s.ny << "\n"
      << "nz = " << s.nz << "\n"
      << "lx = " << fmt(s.lx) << "\n"
      << "ly = " << fmt(s.ly) << "\n"
      << "lz = " << fmt(s.lz) << "\n"
      << "\n[material]\n"
      << "mu = " << fmt(s.mu) << "\n"
      << "lambda = " << fmt(s.lambda) << "\n"
      << "k_iso = " << fmt(s.k_iso) << "\n"
      << "c1 = " << fmt(s.c1) << "\n"
      << "\n[flow]\n"
      << "rule = " << s.rule << "\n"
      << "eta = " << fmt(s.eta) << "\n"
      << "rate_exponent = " << fmt(s.rate_exponent) << "\n"
      << "sigma_y = " << fmt(s.sigma_y) << "\n"
      << "hardening_coupling = " << fmt(s.hardening_coupling) << "\n"
      << "beta = " << fmt(s.beta) << "\n"
      << "\n[load]\n"
      << "preset = " << s.preset << "\n"
      << "amplitude = " << fmt(s.amplitude) << "\n"
      << "total_time = " << fmt(s.total_time) << "\n"
      << "\n[solver]\n"
      << "level = " << s.level << "\n"
      << "eps_reg = " << fmt(s.eps_reg) << "\n"
      << "newton_tol = " << fmt(s.newton_tol) << "\n"
      << "seed = " << s.seed << "\n";
  return out.str();
}

Grid Scenario::make_grid() const { return Grid::box(nx, ny, nz, lx, ly, lz); }

ElasticTensor Scenario::make_tensor(const Grid& g) const { return ElasticTensor(g, mu, lambda); }

HardeningMap Scenario::make_hardening() const { return HardeningMap::isotropic(k_iso); }

std::unique_ptr<FlowRule> Scenario::make_rule() const {
  if (rule == "norton_hoff")
    return std::make_unique<NortonHoff>(eta, rate_exponent, sigma_y, hardening_coupling);
  if (rule == "non_associative")
    return std::make_unique<NonAssociative>(eta, rate_exponent, sigma_y, beta);
  if (rule == "softening_coupling")
    return std::make_unique<SofteningCoupling>(eta, rate_exponent, sigma_y, hardening_coupling);
  throw ConfigError("unknown flow rule '" + rule + "'");
}

RotheOptions Scenario::make_options() const {
  RotheOptions o;
  o.newton_tol = newton_tol;
  return o;
}

RotheScheme::LoadFn Scenario::make_load(const Grid& g) const {
  const double T = total_time;
  const double amp = amplitude;
  if (preset == "zero") {
    return [g](double) { return VectorField(g); };
  }
  if (preset == "uniaxial_ramp") {
    return [g, amp, T](double t) {
      VectorField b(g);
      const double v = amp * t / T;
      for (std::size_t n = 0; n < g.node_count(); ++n) b(n, 2) = v;
      return b;
    };
  }
  if (preset == "shear_ramp") {
    const double zc = 0.5 * lz;
    const double scale = 1.0 / lz;
    return [g, amp, T, zc, scale](double t) {
      VectorField b(g);
      const double v = amp * t / T;
      for (std::size_t n = 0; n < g.node_count(); ++n) {
        auto c = g.coords(n);
        auto x = g.position(c[0], c[1], c[2]);
        b(n, 0) = v * (x[2] - zc) * scale;
      }
      return b;
    };
  }
  if (preset == "load_unload") {
    // ramp to amp at T/2, unload to amp/2 at 3T/4, hold; kinks keep the
    // program piecewise affine
    return [g, amp, T](double t) {
      double phi;
      if (t <= 0.5 * T)
        phi = 2.0 * t / T;
      else if (t <= 0.75 * T)
        phi = 1.0 - 2.0 * (t - 0.5 * T) / T;
      else
        phi = 0.5;
      VectorField b(g);
      const double v = amp * phi;
      for (std::size_t n = 0; n < g.node_count(); ++n) b(n, 2) = v;
      return b;
    };
  }
  throw ConfigError("unknown load preset '" + preset + "'");
}

}  // namespace gradplast
