#include <benchmark/benchmark.h>

#include <cmath>

#include "scarseg/mask.hpp"
#include "scarseg/polygon.hpp"
#include "scarseg/raster.hpp"
#include "scarseg/rng.hpp"
#include "scarseg/sampler.hpp"

using namespace scarseg;

namespace {

Raster rand_raster(int bands, int h, int w, double pixel,
                   std::uint64_t seed) {
    Raster r(bands, h, w);
    r.transform = {0, 0, pixel, pixel};
    Rng rng(seed);
    for (float& v : r.data) v = static_cast<float>(rng.uniform(0, 1000));
    return r;
}

PolygonSet blobs(int n, double extent, std::uint64_t seed) {
    PolygonSet ps;
    Rng rng(seed);
    for (int i = 0; i < n; ++i) {
        const double cx = rng.uniform(0.1, 0.9) * extent;
        const double cy = -rng.uniform(0.1, 0.9) * extent;
        const double a = rng.uniform(20, 120), b = rng.uniform(20, 120);
        Ring ring;
        for (int k = 0; k <= 24; ++k) {
            const double t = 2.0 * 3.14159265358979 * k / 24.0;
            ring.push_back({cx + a * std::cos(t), cy + b * std::sin(t)});
        }
        Polygon p;
        p.exterior = std::move(ring);
        ps.push(std::move(p));
    }
    return ps;
}

}  // namespace

static void BM_resample_bilinear(benchmark::State& state) {
    const int size = static_cast<int>(state.range(0));
    const Raster src = rand_raster(1, size, size, 12.5, 1);
    for (auto _ : state) {
        const Raster out = resample_bilinear(src, 5.0);
        benchmark::DoNotOptimize(out.data.data());
    }
    state.SetItemsProcessed(state.iterations() * size * size);
}
BENCHMARK(BM_resample_bilinear)->Arg(256)->Arg(512)->Arg(1024);

static void BM_rasterize(benchmark::State& state) {
    const int size = static_cast<int>(state.range(0));
    GeoTransform t{0, 0, 5, 5};
    const PolygonSet ps = blobs(40, size * 5.0, 2);
    for (auto _ : state) {
        const Mask m = rasterize(ps, t, size, size);
        benchmark::DoNotOptimize(m.data.data());
    }
    state.SetItemsProcessed(state.iterations() * size * size);
}
BENCHMARK(BM_rasterize)->Arg(512)->Arg(1024);

static void BM_extract_patches(benchmark::State& state) {
    const Raster img = rand_raster(6, 512, 512, 5, 3);
    Mask mask(512, 512);
    mask.transform = img.transform;
    Rng rng(4);
    for (auto& v : mask.data) v = rng.unit() < 0.05 ? 1 : 0;

    SamplingSpec spec;
    spec.method = SamplingMethod::regular;
    spec.patch_size = 64;
    spec.overlap_fraction = 0.2;
    const auto wins = regular_grid(512, 512, spec);
    for (auto _ : state) {
        const PatchSet ps = extract_patches(img, mask, wins);
        benchmark::DoNotOptimize(ps.items.data());
    }
    state.SetItemsProcessed(state.iterations() *
                            static_cast<long long>(wins.size()));
}
BENCHMARK(BM_extract_patches);

static void BM_filter_intersecting(benchmark::State& state) {
    Mask mask(1024, 1024);
    Rng rng(5);
    for (auto& v : mask.data) v = rng.unit() < 0.02 ? 1 : 0;
    SamplingSpec spec;
    spec.method = SamplingMethod::random;
    spec.patch_size = 64;
    spec.n_candidates = 5000;
    spec.seed = 6;
    const auto wins = random_windows(1024, 1024, spec);
    for (auto _ : state) {
        const auto kept = filter_intersecting(wins, mask);
        benchmark::DoNotOptimize(kept.data());
    }
    state.SetItemsProcessed(state.iterations() * 5000);
}
BENCHMARK(BM_filter_intersecting);

BENCHMARK_MAIN();
