// SPDX-License-Identifier: Apache-2.0
#include <benchmark/benchmark.h>

#include "stensor/convert.hpp"
#include "stensor/layout.hpp"
#include "stensor/pipeline.hpp"

namespace {

using namespace stensor;

void bm_direct_apply(benchmark::State& state) {
    const auto spec = stencil_preset("Heat-2D");
    const std::size_t n = static_cast<std::size_t>(state.range(0));
    const std::vector<std::size_t> dims{n, n};
    const Grid g = random_grid(dims, 7);
    for (auto _ : state) {
        auto out = direct_apply(spec, g, 1);
        benchmark::DoNotOptimize(out.values.data());
    }
    state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations()) *
                            static_cast<std::int64_t>((n - 2) * (n - 2)));
}
BENCHMARK(bm_direct_apply)->Arg(64)->Arg(128)->Arg(256);

void bm_crush(benchmark::State& state) {
    const auto spec = stencil_preset("Box-2D49P");
    const std::vector<std::size_t> dims{256, 256};
    const auto flat = flatten(spec, dims);
    const int r = static_cast<int>(state.range(0));
    for (auto _ : state) {
        auto lay = crush(flat, r, r);
        benchmark::DoNotOptimize(lay.a.data.data());
    }
}
BENCHMARK(bm_crush)->Arg(2)->Arg(4)->Arg(8);

void bm_hierarchical_match(benchmark::State& state) {
    const std::size_t m = static_cast<std::size_t>(state.range(0));
    for (auto _ : state) {
        auto match = hierarchical_match(m, m, 7);
        benchmark::DoNotOptimize(match.pairs.data());
    }
}
BENCHMARK(bm_hierarchical_match)->Arg(16)->Arg(64)->Arg(256);

void bm_tiled_matmul(benchmark::State& state) {
    const auto spec = stencil_preset("Heat-2D");
    const std::size_t n = static_cast<std::size_t>(state.range(0));
    const std::vector<std::size_t> dims{n, n};
    const Grid g = random_grid(dims, 11);
    const auto flat = flatten(spec, dims);
    const auto lay = crush(flat, 2, 2);
    const auto cv = convert_layout(lay);
    const auto a2 = compress_24(cv.converted.a);
    const EmulationConfig cfg{Precision::exact64};
    for (auto _ : state) {
        auto r = tiled_sparse_matmul(
            a2,
            [&](std::size_t row, std::size_t col) {
                return b_entry(cv.converted, g, row, col);
            },
            cv.converted.n_prime, kFragSparse, cfg);
        benchmark::DoNotOptimize(r.d.data.data());
    }
}
BENCHMARK(bm_tiled_matmul)->Arg(32)->Arg(64);

}  // namespace

BENCHMARK_MAIN();
