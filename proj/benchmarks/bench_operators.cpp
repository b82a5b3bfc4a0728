// Microbenchmarks for the hot kernels: curl stencils, elastic solves,
// Helmholtz projection, the incremental operator, and one Rothe step.
#include <benchmark/benchmark.h>

#include <cstddef>

#include "gradplast/curl.hpp"
#include "gradplast/elasticity.hpp"
#include "gradplast/fields.hpp"
#include "gradplast/flow_rule.hpp"
#include "gradplast/grid.hpp"
#include "gradplast/rng.hpp"
#include "gradplast/rothe.hpp"

using namespace gradplast;

namespace {

Grid cube(std::size_t n) { return Grid::box(n, n, n, 1.0, 1.0, 1.0); }

MatrixField random_field(const Grid& g, std::uint64_t seed) {
  Rng rng(seed);
  MatrixField f(g);
  for (std::size_t i = 0; i < f.size(); ++i) f[i] = rng.gaussian();
  return f;
}

StateField random_state(const Grid& g, std::uint64_t seed) {
  Rng rng(seed);
  StateField z(g);
  for (std::size_t i = 0; i < z.size(); ++i) z[i] = rng.gaussian();
  return z;
}

VectorField pull(const Grid& g, double v) {
  VectorField b(g);
  for (std::size_t n = 0; n < g.node_count(); ++n) b(n, 2) = v;
  return b;
}

void bm_curl_apply(benchmark::State& state) {
  Grid g = cube(static_cast<std::size_t>(state.range(0)));
  CurlOperator curl(g);
  MatrixField f = random_field(g, 1);
  curl.mask().apply(f);
  for (auto _ : state) {
    MatrixField c = curl.curl_masked(f);
    benchmark::DoNotOptimize(c.data());
  }
  state.SetItemsProcessed(state.iterations() * g.node_count());
}

void bm_curl_curl_apply(benchmark::State& state) {
  Grid g = cube(static_cast<std::size_t>(state.range(0)));
  CurlOperator curl(g);
  MatrixField f = random_field(g, 2);
  curl.mask().apply(f);
  for (auto _ : state) {
    MatrixField a = curl.curl_curl(f);
    benchmark::DoNotOptimize(a.data());
  }
  state.SetItemsProcessed(state.iterations() * g.node_count());
}

void bm_elastic_solve(benchmark::State& state) {
  Grid g = cube(static_cast<std::size_t>(state.range(0)));
  ElasticSystem sys(g, ElasticTensor(g, 1.0, 1.0));
  const MatrixField eps_p = random_field(g, 3);
  const VectorField b = pull(g, 1.0);
  for (auto _ : state) {
    ElasticResult r = sys.solve_dirichlet(sym_field(eps_p), b);
    benchmark::DoNotOptimize(r.iterations);
  }
}

void bm_project_p(benchmark::State& state) {
  Grid g = cube(static_cast<std::size_t>(state.range(0)));
  ElasticSystem sys(g, ElasticTensor(g, 1.0, 1.0));
  const MatrixField x = sym_field(random_field(g, 4));
  for (auto _ : state) {
    MatrixField p = sys.project_p(x);
    benchmark::DoNotOptimize(p.data());
  }
}

void bm_m_operator(benchmark::State& state) {
  Grid g = cube(static_cast<std::size_t>(state.range(0)));
  ElasticSystem sys(g, ElasticTensor(g, 1.0, 1.0));
  HardeningMap hard = HardeningMap::isotropic(0.1);
  MOperator m(sys, hard);
  const StateField z = random_state(g, 5);
  for (auto _ : state) {
    StateField mz = m.apply(z);
    benchmark::DoNotOptimize(mz.data());
  }
}

void bm_flow_eval(benchmark::State& state) {
  Grid g = cube(static_cast<std::size_t>(state.range(0)));
  NortonHoff rule(1.0, 1.0, 0.1, 0.5);
  StateField dual = random_state(g, 6);
  dual *= 0.3;
  for (auto _ : state) {
    StateField r = rule.eval_field(dual);
    benchmark::DoNotOptimize(r.data());
  }
  state.SetItemsProcessed(state.iterations() * g.node_count());
}

void bm_rothe_step(benchmark::State& state) {
  Grid g = cube(static_cast<std::size_t>(state.range(0)));
  ElasticSystem sys(g, ElasticTensor(g, 1.0, 1.0));
  CurlOperator curl(g);
  HardeningMap hard = HardeningMap::isotropic(0.1);
  NortonHoff rule(1.0, 1.0, 0.1, 0.5);
  auto load = [&](double t) { return pull(g, 2.0 * t); };
  for (auto _ : state) {
    RotheScheme scheme(sys, curl, hard, rule, 0.1, 1e-6);
    Trajectory tr = scheme.run(load, StateField(g), 0.25, 2, false);
    benchmark::DoNotOptimize(tr.states.back().data());
  }
}

}  // namespace

BENCHMARK(bm_curl_apply)->Arg(8)->Arg(16)->Unit(benchmark::kMicrosecond);
BENCHMARK(bm_curl_curl_apply)->Arg(8)->Arg(16)->Unit(benchmark::kMicrosecond);
BENCHMARK(bm_elastic_solve)->Arg(8)->Arg(12)->Unit(benchmark::kMillisecond);
BENCHMARK(bm_project_p)->Arg(8)->Arg(12)->Unit(benchmark::kMillisecond);
BENCHMARK(bm_m_operator)->Arg(8)->Arg(12)->Unit(benchmark::kMillisecond);
BENCHMARK(bm_flow_eval)->Arg(8)->Arg(16)->Unit(benchmark::kMicrosecond);
BENCHMARK(bm_rothe_step)->Arg(6)->Arg(8)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
