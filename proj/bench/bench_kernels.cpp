// Hot-path kernels: OpenMP versions against the single-threaded reference.
// Run with --benchmark_filter=laplacian etc.; the /N argument is the cells
// per axis of a 3D cube.

#include <benchmark/benchmark.h>

#include "qtflow/kernels.hpp"
#include "qtflow/model.hpp"
#include "qtflow/rng.hpp"
#include "qtflow/serial_ref.hpp"
#include "qtflow/stepper.hpp"

using namespace qtflow;

namespace {

Grid cube(int n) {
    Grid g;
    g.dim = 3;
    g.cells = {n, n, n};
    g.extent = {1.0, 1.0, 1.0};
    g.bc = Bc::NeumannZero;
    return g;
}

QTensorField sample_field(const Grid& g, std::uint64_t seed) {
    QTensorField f(g);
    Rng rng(seed);
    for (QTensor& q : f.v) q = rng.tensor(0.3);
    return f;
}

void bm_laplacian_omp(benchmark::State& state) {
    const QTensorField f = sample_field(cube(static_cast<int>(state.range(0))), 1);
    for (auto _ : state) benchmark::DoNotOptimize(laplacian(f));
    state.SetItemsProcessed(state.iterations() *
                            static_cast<long>(f.size()));
}

void bm_laplacian_serial(benchmark::State& state) {
    const QTensorField f = sample_field(cube(static_cast<int>(state.range(0))), 1);
    for (auto _ : state) benchmark::DoNotOptimize(serial_ref::laplacian(f));
    state.SetItemsProcessed(state.iterations() *
                            static_cast<long>(f.size()));
}

void bm_gradient_norm_omp(benchmark::State& state) {
    const QTensorField f = sample_field(cube(static_cast<int>(state.range(0))), 2);
    for (auto _ : state) benchmark::DoNotOptimize(gradient_norm_sq(f));
    state.SetItemsProcessed(state.iterations() *
                            static_cast<long>(f.size()));
}

void bm_gradient_norm_serial(benchmark::State& state) {
    const QTensorField f = sample_field(cube(static_cast<int>(state.range(0))), 2);
    for (auto _ : state)
        benchmark::DoNotOptimize(serial_ref::gradient_norm_sq(f));
    state.SetItemsProcessed(state.iterations() *
                            static_cast<long>(f.size()));
}

void bm_l2_inner_omp(benchmark::State& state) {
    const Grid g = cube(static_cast<int>(state.range(0)));
    const QTensorField a = sample_field(g, 3), b = sample_field(g, 4);
    for (auto _ : state) benchmark::DoNotOptimize(l2_inner(a, b));
    state.SetItemsProcessed(state.iterations() *
                            static_cast<long>(a.size()));
}

void bm_l2_inner_serial(benchmark::State& state) {
    const Grid g = cube(static_cast<int>(state.range(0)));
    const QTensorField a = sample_field(g, 3), b = sample_field(g, 4);
    for (auto _ : state)
        benchmark::DoNotOptimize(serial_ref::l2_inner(a, b));
    state.SetItemsProcessed(state.iterations() *
                            static_cast<long>(a.size()));
}

void bm_aux_gradient_omp(benchmark::State& state) {
    const QTensorField q = sample_field(cube(static_cast<int>(state.range(0))), 5);
    const ModelParams p{};
    for (auto _ : state) benchmark::DoNotOptimize(aux_gradient_field(q, p));
    state.SetItemsProcessed(state.iterations() *
                            static_cast<long>(q.size()));
}

void bm_aux_gradient_serial(benchmark::State& state) {
    const QTensorField q = sample_field(cube(static_cast<int>(state.range(0))), 5);
    const ModelParams p{};
    for (auto _ : state)
        benchmark::DoNotOptimize(serial_ref::aux_gradient_field(q, p));
    state.SetItemsProcessed(state.iterations() *
                            static_cast<long>(q.size()));
}

void bm_update_operator(benchmark::State& state) {
    const Grid g = cube(static_cast<int>(state.range(0)));
    const QTensorField x = sample_field(g, 6);
    const QTensorField pn = sample_field(g, 7);
    const ModelParams p{};
    for (auto _ : state)
        benchmark::DoNotOptimize(apply_update_operator(x, pn, p, 1e-3));
    state.SetItemsProcessed(state.iterations() *
                            static_cast<long>(x.size()));
}

}  // namespace

BENCHMARK(bm_laplacian_omp)->Arg(16)->Arg(32)->Arg(48);
BENCHMARK(bm_laplacian_serial)->Arg(16)->Arg(32)->Arg(48);
BENCHMARK(bm_gradient_norm_omp)->Arg(16)->Arg(32)->Arg(48);
BENCHMARK(bm_gradient_norm_serial)->Arg(16)->Arg(32)->Arg(48);
BENCHMARK(bm_l2_inner_omp)->Arg(16)->Arg(32)->Arg(48);
BENCHMARK(bm_l2_inner_serial)->Arg(16)->Arg(32)->Arg(48);
BENCHMARK(bm_aux_gradient_omp)->Arg(16)->Arg(32)->Arg(48);
BENCHMARK(bm_aux_gradient_serial)->Arg(16)->Arg(32)->Arg(48);
BENCHMARK(bm_update_operator)->Arg(16)->Arg(32)->Arg(48);

BENCHMARK_MAIN();
