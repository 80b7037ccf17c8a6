#include <benchmark/benchmark.h>

#include "scarseg/rng.hpp"
#include "scarseg/unet.hpp"

using namespace scarseg;

namespace {

Tensor4 rand_input(int n, int c, int h, int w, std::uint64_t seed) {
    Tensor4 x(n, c, h, w);
    Rng rng(seed);
    for (float& v : x.data) v = static_cast<float>(rng.uniform(-1, 1));
    return x;
}

}  // namespace

static void BM_gemm(benchmark::State& state) {
    const int m = static_cast<int>(state.range(0));
    std::vector<float> a(static_cast<std::size_t>(m) * m);
    std::vector<float> b(a.size()), c(a.size());
    Rng rng(1);
    for (float& v : a) v = static_cast<float>(rng.uniform(-1, 1));
    for (float& v : b) v = static_cast<float>(rng.uniform(-1, 1));
    for (auto _ : state) {
        gemm<float>(m, m, m, a.data(), b.data(), c.data(), false);
        benchmark::DoNotOptimize(c.data());
    }
    state.SetItemsProcessed(state.iterations() * 2ll * m * m * m);
}
BENCHMARK(BM_gemm)->Arg(64)->Arg(128)->Arg(256)->Arg(512);

static void BM_conv3x3_fwd(benchmark::State& state) {
    const int ch = static_cast<int>(state.range(0));
    const int size = static_cast<int>(state.range(1));
    const Tensor4 x = rand_input(1, ch, size, size, 2);
    Tensor4 k(ch, ch, 3, 3);
    Rng rng(3);
    for (float& v : k.data) v = static_cast<float>(rng.uniform(-0.1, 0.1));
    std::vector<float> bias(ch, 0.01f);
    Tensor4 out;
    ConvScratch<float> ws;
    for (auto _ : state) {
        conv2d_3x3_same_fwd(x, k, bias, out, ws);
        benchmark::DoNotOptimize(out.data.data());
    }
    state.SetItemsProcessed(state.iterations() * 9ll * 2 * ch * ch * size *
                            size);
}
BENCHMARK(BM_conv3x3_fwd)->Args({16, 64})->Args({32, 32})->Args({64, 16});

static void BM_unet_forward(benchmark::State& state) {
    const int filters = static_cast<int>(state.range(0));
    UNetConfig cfg;
    cfg.in_channels = 6;
    cfg.init_filters = filters;
    cfg.depth = 3;
    const auto params = init_weights<float>(cfg, 7);
    const Tensor4 x = rand_input(1, 6, 64, 64, 8);
    for (auto _ : state) {
        const Tensor4 probs = unet_forward(cfg, params, x);
        benchmark::DoNotOptimize(probs.data.data());
    }
}
BENCHMARK(BM_unet_forward)->Arg(16)->Arg(32);

static void BM_unet_train_step(benchmark::State& state) {
    UNetConfig cfg;
    cfg.in_channels = 6;
    cfg.init_filters = static_cast<int>(state.range(0));
    cfg.depth = 3;
    auto params = init_weights<float>(cfg, 9);
    auto grads = build_params<float>(cfg);
    AdamState adam;
    AdamConfig acfg;
    const Tensor4 x = rand_input(4, 6, 32, 32, 10);
    Tensor4 targets(4, 1, 32, 32);
    Rng rng(11);
    for (float& v : targets.data) v = rng.bounded(2) ? 1.0f : 0.0f;
    for (auto _ : state) {
        UNetTrace<float> trace;
        const Tensor4 probs = unet_forward(cfg, params, x, &trace);
        Tensor4 gprobs;
        bce_loss(probs, targets, &gprobs);
        zero_params(grads);
        unet_backward(cfg, params, trace, gprobs, grads);
        adam_step(params, grads, adam, acfg);
        benchmark::DoNotOptimize(params.out.bias.data());
    }
}
BENCHMARK(BM_unet_train_step)->Arg(16);

BENCHMARK_MAIN();
