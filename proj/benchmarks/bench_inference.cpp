#include <benchmark/benchmark.h>

#include "scarseg/inference.hpp"
#include "scarseg/metrics.hpp"
#include "scarseg/rng.hpp"

using namespace scarseg;

namespace {

Raster rand_area(int bands, int size, std::uint64_t seed) {
    Raster r(bands, size, size);
    r.transform = {0, 0, 5, 5};
    Rng rng(seed);
    for (float& v : r.data) v = static_cast<float>(rng.uniform(0, 1));
    return r;
}

}  // namespace

static void BM_predict_tiled(benchmark::State& state) {
    const int tile = static_cast<int>(state.range(0));
    const int threads = static_cast<int>(state.range(1));
    UNetConfig cfg;
    cfg.in_channels = 6;
    cfg.init_filters = 16;
    cfg.depth = 3;
    const auto params = init_weights<float>(cfg, 1);
    const Raster area = rand_area(6, 256, 2);
    for (auto _ : state) {
        const Raster probs =
            predict_tiled(cfg, params, area, tile, 0.5, threads);
        benchmark::DoNotOptimize(probs.data.data());
    }
    state.SetItemsProcessed(state.iterations() * 256 * 256);
}
BENCHMARK(BM_predict_tiled)
    ->Args({32, 1})
    ->Args({64, 1})
    ->Args({64, 2})
    ->Args({64, 4});

static void BM_confusion(benchmark::State& state) {
    const int size = static_cast<int>(state.range(0));
    Mask pred(size, size), truth(size, size);
    Rng rng(3);
    for (auto& v : pred.data) v = rng.bounded(2) ? 1 : 0;
    for (auto& v : truth.data) v = rng.bounded(2) ? 1 : 0;
    for (auto _ : state) {
        const ConfusionCounts c = confusion(pred, truth);
        benchmark::DoNotOptimize(&c);
    }
    state.SetItemsProcessed(state.iterations() * size * size);
}
BENCHMARK(BM_confusion)->Arg(1024)->Arg(2048);

static void BM_binarize(benchmark::State& state) {
    const Raster probs = rand_area(1, 1024, 4);
    for (auto _ : state) {
        const Mask m = binarize(probs, 0.5);
        benchmark::DoNotOptimize(m.data.data());
    }
    state.SetItemsProcessed(state.iterations() * 1024 * 1024);
}
BENCHMARK(BM_binarize);

BENCHMARK_MAIN();
