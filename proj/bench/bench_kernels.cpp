// OpenMP kernels against their serial references, plus one full free
// propagation step and a perturbed Strang step for scale. Argument: grid
// points per axis.

#include <benchmark/benchmark.h>

#include <random>

#include "diraclab/free_dynamics.hpp"
#include "diraclab/kernels.hpp"
#include "diraclab/potential.hpp"

using namespace diraclab;

namespace {

template <class Field>
Field random_field(const PeriodicGrid& g, std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> n01;
    Field f(g);
    for (auto& v : f.values()) v = {n01(rng), n01(rng)};
    return f;
}

std::vector<Mat4> site_matrices(std::size_t n)
{
    std::vector<Mat4> m(n);
    for (std::size_t i = 0; i < n; ++i) m[i] = Mat4::Identity() * cd(std::cos(0.01 * i), std::sin(0.01 * i));
    return m;
}

std::vector<Mat8> mode_matrices(std::size_t n)
{
    std::vector<Mat8> m(n);
    for (std::size_t i = 0; i < n; ++i) m[i] = Mat8::Identity() * (1.0 + 1e-3 * double(i % 7));
    return m;
}

void set_bytes(benchmark::State& state, std::size_t bytes)
{
    state.SetBytesProcessed(std::int64_t(state.iterations()) * std::int64_t(bytes));
}

}  // namespace

static void BM_SumSquares(benchmark::State& state)
{
    const PeriodicGrid g(int(state.range(0)), double(state.range(0)));
    const auto f = random_field<ComplexSpinorField>(g, 1);
    for (auto _ : state) benchmark::DoNotOptimize(kernels::sum_squares(f.values()));
    set_bytes(state, f.values().size() * sizeof(cd));
}

static void BM_SumSquaresReference(benchmark::State& state)
{
    const PeriodicGrid g(int(state.range(0)), double(state.range(0)));
    const auto f = random_field<ComplexSpinorField>(g, 1);
    for (auto _ : state) benchmark::DoNotOptimize(kernels::reference::sum_squares(f.values()));
    set_bytes(state, f.values().size() * sizeof(cd));
}

static void BM_ConjDot(benchmark::State& state)
{
    const PeriodicGrid g(int(state.range(0)), double(state.range(0)));
    const auto a = random_field<ComplexSpinorField>(g, 1);
    const auto b = random_field<ComplexSpinorField>(g, 2);
    for (auto _ : state) benchmark::DoNotOptimize(kernels::conj_dot(a.values(), b.values()));
    set_bytes(state, 2 * a.values().size() * sizeof(cd));
}

static void BM_ConjDotReference(benchmark::State& state)
{
    const PeriodicGrid g(int(state.range(0)), double(state.range(0)));
    const auto a = random_field<ComplexSpinorField>(g, 1);
    const auto b = random_field<ComplexSpinorField>(g, 2);
    for (auto _ : state) benchmark::DoNotOptimize(kernels::reference::conj_dot(a.values(), b.values()));
    set_bytes(state, 2 * a.values().size() * sizeof(cd));
}

static void BM_FreePropagatorSymbol(benchmark::State& state)
{
    const PeriodicGrid g(int(state.range(0)), double(state.range(0)));
    auto s = random_field<SpinorSpectrum>(g, 3);
    for (auto _ : state) {
        kernels::apply_free_propagator(1.0, 0.05, s);
        benchmark::ClobberMemory();
    }
    set_bytes(state, s.values().size() * sizeof(cd));
}

static void BM_FreePropagatorSymbolReference(benchmark::State& state)
{
    const PeriodicGrid g(int(state.range(0)), double(state.range(0)));
    auto s = random_field<SpinorSpectrum>(g, 3);
    for (auto _ : state) {
        kernels::reference::apply_free_propagator(1.0, 0.05, s);
        benchmark::ClobberMemory();
    }
    set_bytes(state, s.values().size() * sizeof(cd));
}

static void BM_SiteMatrices(benchmark::State& state)
{
    const PeriodicGrid g(int(state.range(0)), double(state.range(0)));
    auto f = random_field<ComplexSpinorField>(g, 4);
    const auto m = site_matrices(g.size());
    for (auto _ : state) {
        kernels::apply_site_matrices(m, f);
        benchmark::ClobberMemory();
    }
    set_bytes(state, f.values().size() * sizeof(cd));
}

static void BM_SiteMatricesReference(benchmark::State& state)
{
    const PeriodicGrid g(int(state.range(0)), double(state.range(0)));
    auto f = random_field<ComplexSpinorField>(g, 4);
    const auto m = site_matrices(g.size());
    for (auto _ : state) {
        kernels::reference::apply_site_matrices(m, f);
        benchmark::ClobberMemory();
    }
    set_bytes(state, f.values().size() * sizeof(cd));
}

static void BM_ModeMatrices(benchmark::State& state)
{
    const PeriodicGrid g(int(state.range(0)), double(state.range(0)));
    auto s = random_field<RealSpinorSpectrum>(g, 5);
    const auto m = mode_matrices(g.size());
    for (auto _ : state) {
        kernels::apply_mode_matrices(m, s);
        benchmark::ClobberMemory();
    }
    set_bytes(state, s.values().size() * sizeof(cd));
}

static void BM_ModeMatricesReference(benchmark::State& state)
{
    const PeriodicGrid g(int(state.range(0)), double(state.range(0)));
    auto s = random_field<RealSpinorSpectrum>(g, 5);
    const auto m = mode_matrices(g.size());
    for (auto _ : state) {
        kernels::reference::apply_mode_matrices(m, s);
        benchmark::ClobberMemory();
    }
    set_bytes(state, s.values().size() * sizeof(cd));
}

static void BM_EvolveFree(benchmark::State& state)
{
    const PeriodicGrid g(int(state.range(0)), double(state.range(0)));
    const auto f = random_field<ComplexSpinorField>(g, 6);
    for (auto _ : state) benchmark::DoNotOptimize(evolve_free(f, 1.0, 1.0));
}

static void BM_PerturbedStep(benchmark::State& state)
{
    const PeriodicGrid g(int(state.range(0)), double(state.range(0)));
    PotentialProfile p;
    p.kind = ProfileKind::gaussian_beta;
    p.amplitude = 0.5;
    p.width = 2.0;
    const auto V = build_potential(g, p, 6.0);
    const PerturbedPropagator prop(V, 1.0, 0.05);
    auto f = random_field<ComplexSpinorField>(g, 7);
    for (auto _ : state) {
        prop.advance(f, 1);
        benchmark::ClobberMemory();
    }
}

BENCHMARK(BM_SumSquares)->Arg(16)->Arg(32);
BENCHMARK(BM_SumSquaresReference)->Arg(16)->Arg(32);
BENCHMARK(BM_ConjDot)->Arg(16)->Arg(32);
BENCHMARK(BM_ConjDotReference)->Arg(16)->Arg(32);
BENCHMARK(BM_FreePropagatorSymbol)->Arg(16)->Arg(32);
BENCHMARK(BM_FreePropagatorSymbolReference)->Arg(16)->Arg(32);
BENCHMARK(BM_SiteMatrices)->Arg(16)->Arg(32);
BENCHMARK(BM_SiteMatricesReference)->Arg(16)->Arg(32);
BENCHMARK(BM_ModeMatrices)->Arg(16)->Arg(32);
BENCHMARK(BM_ModeMatricesReference)->Arg(16)->Arg(32);
BENCHMARK(BM_EvolveFree)->Arg(16)->Arg(32)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_PerturbedStep)->Arg(16)->Arg(32)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
