#include <benchmark/benchmark.h>

#include "plateopt/adjoint1d.hpp"
#include "plateopt/dkt.hpp"
#include "plateopt/experiments.hpp"
#include "plateopt/grid1d.hpp"
#include "plateopt/phasefield.hpp"
#include "plateopt/plate.hpp"

using namespace plateopt;

static void BM_State1D(benchmark::State& st) {
  const Grid1D g = Grid1D::uniform(static_cast<int>(st.range(0)));
  const RelaxedDesign d = RelaxedDesign::constant(g, 0.3, 1.0, 100.0);
  const LoadSpec1D load{10.0, {}};
  for (auto _ : st) benchmark::DoNotOptimize(solve_state_1d(d.profile(), load, 1e-12));
}
BENCHMARK(BM_State1D)->Arg(256)->Arg(4096);

static void BM_ElementStiffness(benchmark::State& st) {
  const int n = static_cast<int>(st.range(0));
  const TriMesh m = structured_rect(n, n, 1.0, 1.0, ClampSide::Left);
  const QuadField B = constant_field(m, {1.0});
  for (auto _ : st) benchmark::DoNotOptimize(element_stiffness(m, B, EnergyScale::AsPrinted));
}
BENCHMARK(BM_ElementStiffness)->Arg(16)->Arg(64);

static void BM_PlateNewton(benchmark::State& st) {
  const int n = static_cast<int>(st.range(0));
  const TriMesh m = structured_rect(n, n, 1.0, 1.0, ClampSide::Left);
  PlateProblem pr;
  pr.B = constant_field(m, {1.0});
  pr.f = quad_field_from_function(m, 3, load_case_force("uniform", 25.0, m));
  for (auto _ : st) benchmark::DoNotOptimize(newton_solve_plate(m, pr, PlateState::zero(m)));
}
BENCHMARK(BM_PlateNewton)->Arg(16)->Arg(32)->Unit(benchmark::kMillisecond);
BENCHMARK_MAIN();
