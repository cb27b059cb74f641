// Serial vs OpenMP timings of the parallel kernels.

#include <benchmark/benchmark.h>

#include "reflectsim/analysis.hpp"
#include "reflectsim/counterexample.hpp"
#include "reflectsim/exact_solver.hpp"
#include "reflectsim/geometry.hpp"
#include "reflectsim/penalty_solver.hpp"

using namespace reflectsim;

namespace
{

Execution mode(const benchmark::State& st) { return st.range(0) ? Execution::parallel : Execution::serial; }

SystemState dropped_ball()
{
    SystemState s;
    s.X = Configuration::Constant(1, 1, 1.0);
    s.V = Configuration::Zero(1, 1);
    return s;
}

void BM_validate_geometry(benchmark::State& st)
{
    const Annulus ann((Vec(3) << 0, 0, 0).finished(), 1.0, 2.0);
    for (auto _ : st)
        benchmark::DoNotOptimize(validate_geometry(ann, 10000, 7, {}, mode(st)));
}

void BM_convergence_sweep(benchmark::State& st)
{
    const Interval iv(0.0, 10.0);
    const ConstantGravity g(1, Vec::Constant(1, -1.0));
    const Trajectory ref = simulate_exact(iv, g, dropped_ball(), 3.0);
    for (auto _ : st)
        benchmark::DoNotOptimize(convergence_sweep(iv, g, dropped_ball(), 3.0, {1e2, 1e3, 1e4, 1e5, 1e6}, ref, {},
                                                   mode(st)));
}

void BM_weak_form(benchmark::State& st)
{
    const Interval iv(0.0, 10.0);
    const ConstantGravity g(1, Vec::Constant(1, -1.0));
    const Trajectory tr = simulate_exact(iv, g, dropped_ball(), 28.0);
    const BoundaryMeasure m = extract_measure(tr);
    const auto fns = make_test_functions(tr, 200);
    for (auto _ : st)
        benchmark::DoNotOptimize(weak_form_residual(tr, m, g, fns, mode(st)));
}

void BM_certificate(benchmark::State& st)
{
    const CounterexampleParams p = make_params(2);
    for (auto _ : st)
        benchmark::DoNotOptimize(verify_counterexample(p, 10, {}, mode(st)));
}

} // namespace

BENCHMARK(BM_validate_geometry)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_convergence_sweep)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_weak_form)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_certificate)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
