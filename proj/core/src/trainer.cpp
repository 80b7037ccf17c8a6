#include "scarseg/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numeric>
#include <thread>

#include "scarseg/log.hpp"
#include "scarseg/rng.hpp"

namespace fs = std::filesystem;

namespace scarseg {

void TrainConfig::validate() const {
    if (epochs < 1) throw Error("trainer", "epochs must be >= 1");
    if (batch_size < 1) throw Error("trainer", "batch_size must be >= 1");
    if (!(val_fraction > 0.0 && val_fraction < 1.0))
        throw Error("trainer", "val_fraction must be in (0, 1)");
    if (learning_rate < 0.0)
        throw Error("trainer", "learning_rate must be >= 0");
    if (threads < 1) throw Error("trainer", "threads must be >= 1");
}

namespace {

void to_tensors(const PatchItem& it, Tensor4& x, Tensor4& y) {
    const Raster& img = it.image;
    x = Tensor4(1, img.bands, img.height, img.width);
    std::memcpy(x.data.data(), img.data.data(),
                img.data.size() * sizeof(float));
    y = Tensor4(1, 1, it.mask.height, it.mask.width);
    for (std::size_t i = 0; i < it.mask.data.size(); ++i)
        y.data[i] = it.mask.data[i] ? 1.0f : 0.0f;
}

void add_params(UNetParams& dst, UNetParams& src) {
    std::vector<std::vector<float>*> d, s;
    visit_tensors(dst, [&](const std::string&, std::vector<float>& v,
                           const std::vector<int>&) { d.push_back(&v); });
    visit_tensors(src, [&](const std::string&, std::vector<float>& v,
                           const std::vector<int>&) { s.push_back(&v); });
    for (std::size_t i = 0; i < d.size(); ++i)
        for (std::size_t k = 0; k < d[i]->size(); ++k)
            (*d[i])[k] += (*s[i])[k];
}

// Forward+backward over items[order[lo..hi)], gradients scaled by inv_batch.
// Returns the sum of per-sample losses.
double grad_chunk(const UNetConfig& cfg, const UNetParams& params,
                  const std::vector<PatchItem>& items,
                  const std::vector<std::size_t>& order, std::size_t lo,
                  std::size_t hi, float inv_batch, UNetParams& grads) {
    Tensor4 x, y, gp;
    UNetTrace<float> tr;
    double loss_sum = 0;
    for (std::size_t k = lo; k < hi; ++k) {
        to_tensors(items[order[k]], x, y);
        unet_forward(cfg, params, x, &tr);
        loss_sum += bce_loss(tr.probs, y, &gp);
        for (float& g : gp.data) g *= inv_batch;
        unet_backward(cfg, params, tr, gp, grads);
    }
    return loss_sum;
}

double loss_chunk(const UNetConfig& cfg, const UNetParams& params,
                  const std::vector<PatchItem>& items, std::size_t lo,
                  std::size_t hi) {
    Tensor4 x, y;
    double loss_sum = 0;
    for (std::size_t k = lo; k < hi; ++k) {
        to_tensors(items[k], x, y);
        const Tensor4 probs = unet_forward(cfg, params, x);
        loss_sum += bce_loss(probs, y);
    }
    return loss_sum;
}

// Splits [0,n) into at most `threads` contiguous chunks and runs fn(lo,hi,slot)
// on each; results must be merged by slot order for determinism.
template <typename Fn>
int run_chunked(std::size_t n, int threads, Fn&& fn) {
    const int nw = static_cast<int>(
        std::min<std::size_t>(static_cast<std::size_t>(threads), n));
    if (nw <= 1) {
        fn(std::size_t{0}, n, 0);
        return 1;
    }
    std::vector<std::thread> pool;
    const std::size_t per = (n + nw - 1) / nw;
    for (int t = 0; t < nw; ++t) {
        const std::size_t lo = per * t;
        const std::size_t hi = std::min(n, per * (t + 1));
        if (lo >= hi) break;
        pool.emplace_back([&fn, lo, hi, t] { fn(lo, hi, t); });
    }
    for (auto& th : pool) th.join();
    return nw;
}

void check_patches(const UNetConfig& net_cfg, const PatchSet& ps) {
    if (ps.items.empty()) throw Error("trainer", "patch set is empty");
    const int div = 1 << net_cfg.depth;
    for (const auto& it : ps.items) {
        if (it.image.bands != net_cfg.in_channels)
            throw Error("trainer",
                        "patch has " + std::to_string(it.image.bands) +
                            " channels, network expects " +
                            std::to_string(net_cfg.in_channels));
        if (it.image.height % div != 0 || it.image.width % div != 0)
            throw Error("trainer", "patch size " +
                                       std::to_string(it.image.height) +
                                       " not divisible by 2^depth = " +
                                       std::to_string(div));
        if (it.mask.height != it.image.height ||
            it.mask.width != it.image.width)
            throw Error("trainer", "patch image/mask dims disagree");
    }
}

}  // namespace

std::pair<PatchSet, PatchSet> split_train_val(const PatchSet& ps,
                                              double val_fraction,
                                              std::uint64_t seed) {
    if (ps.items.size() < 2)
        throw Error("trainer", "need at least 2 patches to split");
    if (!(val_fraction > 0.0 && val_fraction < 1.0))
        throw Error("trainer", "val_fraction must be in (0, 1)");
    const std::size_t n = ps.items.size();
    const std::size_t n_val = static_cast<std::size_t>(
        std::llround(val_fraction * static_cast<double>(n)));
    if (n_val == 0 || n_val == n)
        throw Error("trainer", "split leaves an empty side: " +
                                   std::to_string(n) + " patches at fraction " +
                                   std::to_string(val_fraction));
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(seed);
    shuffle(order, rng);

    PatchSet train, val;
    train.patch_size = val.patch_size = ps.patch_size;
    train.channels = val.channels = ps.channels;
    train.spec = val.spec = ps.spec;
    train.normalization = val.normalization = ps.normalization;
    for (std::size_t i = 0; i < n; ++i) {
        if (i < n_val)
            val.items.push_back(ps.items[order[i]]);
        else
            train.items.push_back(ps.items[order[i]]);
    }
    return {std::move(train), std::move(val)};
}

double evaluate_loss(const UNetConfig& cfg, const UNetParams& params,
                     const std::vector<PatchItem>& items, int threads) {
    if (items.empty()) throw Error("trainer", "no patches to evaluate");
    std::vector<double> partial(static_cast<std::size_t>(std::max(threads, 1)),
                                0.0);
    run_chunked(items.size(), threads,
                [&](std::size_t lo, std::size_t hi, int slot) {
                    partial[static_cast<std::size_t>(slot)] =
                        loss_chunk(cfg, params, items, lo, hi);
                });
    double sum = 0;
    for (double p : partial) sum += p;
    return sum / static_cast<double>(items.size());
}

TrainResult train(const TrainConfig& cfg, const UNetConfig& net_cfg,
                  const PatchSet& ps, const std::string& out_dir) {
    cfg.validate();
    net_cfg.validate();
    check_patches(net_cfg, ps);

    auto [train_set, val_set] =
        split_train_val(ps, cfg.val_fraction, cfg.shuffle_seed);
    log_info("training on " + std::to_string(train_set.items.size()) +
             " patches, validating on " + std::to_string(val_set.items.size()));

    fs::create_directories(out_dir);
    std::ofstream hist(fs::path(out_dir) / "history.csv", std::ios::trunc);
    if (!hist)
        throw Error("trainer", "cannot write history.csv in " + out_dir);
    hist << "epoch,train_loss,val_loss,seconds,saved\n";

    UNetParams params =
        init_weights<float>(net_cfg, mix_seed(cfg.shuffle_seed, 0x696e6974u));
    AdamState adam;
    AdamConfig adam_cfg;
    adam_cfg.lr = cfg.learning_rate;

    const std::size_t n_train = train_set.items.size();
    std::vector<std::size_t> order(n_train);
    std::iota(order.begin(), order.end(), std::size_t{0});

    TrainResult res;
    res.checkpoint_dir = out_dir;
    double best = std::numeric_limits<double>::infinity();

    std::vector<UNetParams> chunk_grads;
    std::vector<double> chunk_loss;

    for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
        const auto t0 = std::chrono::steady_clock::now();
        Rng erng(mix_seed(cfg.shuffle_seed, static_cast<std::uint64_t>(epoch)));
        shuffle(order, erng);

        double loss_sum = 0;
        for (std::size_t start = 0; start < n_train;
             start += static_cast<std::size_t>(cfg.batch_size)) {
            const std::size_t stop = std::min(
                n_train, start + static_cast<std::size_t>(cfg.batch_size));
            const std::size_t bn = stop - start;
            const float inv_batch = 1.0f / static_cast<float>(bn);

            const int nw = static_cast<int>(
                std::min<std::size_t>(static_cast<std::size_t>(cfg.threads), bn));
            chunk_grads.assign(static_cast<std::size_t>(std::max(nw, 1)),
                               build_params<float>(net_cfg));
            chunk_loss.assign(chunk_grads.size(), 0.0);
            run_chunked(bn, cfg.threads,
                        [&](std::size_t lo, std::size_t hi, int slot) {
                            chunk_loss[static_cast<std::size_t>(slot)] =
                                grad_chunk(net_cfg, params, train_set.items,
                                           order, start + lo, start + hi,
                                           inv_batch, chunk_grads[slot]);
                        });
            for (std::size_t s = 1; s < chunk_grads.size(); ++s)
                add_params(chunk_grads[0], chunk_grads[s]);
            for (double l : chunk_loss) loss_sum += l;
            adam_step(params, chunk_grads[0], adam, adam_cfg);
        }
        const double train_loss = loss_sum / static_cast<double>(n_train);
        const double val_loss =
            evaluate_loss(net_cfg, params, val_set.items, cfg.threads);

        EpochStats st;
        st.epoch = epoch;
        st.train_loss = train_loss;
        st.val_loss = val_loss;
        st.saved = val_loss < best;
        if (st.saved) {
            best = val_loss;
            res.best_epoch = epoch;
            res.best_val_loss = val_loss;
            CheckpointMeta meta;
            meta.seed = cfg.shuffle_seed;
            meta.epoch = epoch;
            meta.val_loss = val_loss;
            meta.normalization = ps.normalization;
            save_checkpoint(out_dir, net_cfg, params, meta);
        }
        st.seconds = std::chrono::duration<double>(
                         std::chrono::steady_clock::now() - t0)
                         .count();
        res.history.push_back(st);

        char row[160];
        std::snprintf(row, sizeof(row), "%d,%.9g,%.9g,%.3f,%d\n", epoch,
                      train_loss, val_loss, st.seconds, st.saved ? 1 : 0);
        hist << row;
        hist.flush();
        log_info("epoch " + std::to_string(epoch) + ": train " +
                 std::to_string(train_loss) + " val " +
                 std::to_string(val_loss) + (st.saved ? " (saved)" : ""));
    }
    return res;
}

}  // namespace scarseg
