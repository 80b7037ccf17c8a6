#include "scarseg/inference.hpp"

#include <algorithm>
#include <cstring>
#include <thread>
#include <vector>

#include "scarseg/log.hpp"
#include "scarseg/sampler.hpp"

namespace scarseg {

Raster predict_tiled(const UNetConfig& cfg, const UNetParams& params,
                     const Raster& area, int tile, double overlap_fraction,
                     int threads) {
    cfg.validate();
    area.validate();
    if (area.bands != cfg.in_channels)
        throw Error("inference_eval",
                    "area has " + std::to_string(area.bands) +
                        " channels, model expects " +
                        std::to_string(cfg.in_channels));
    const int div = 1 << cfg.depth;
    if (tile < div || tile % div != 0)
        throw Error("inference_eval", "tile " + std::to_string(tile) +
                                          " not divisible by 2^depth = " +
                                          std::to_string(div));
    if (tile > area.height || tile > area.width)
        throw Error("inference_eval",
                    "tile " + std::to_string(tile) + " larger than area " +
                        std::to_string(area.height) + "x" +
                        std::to_string(area.width));

    SamplingSpec grid;
    grid.method = SamplingMethod::regular;
    grid.patch_size = tile;
    grid.overlap_fraction = overlap_fraction;
    const std::vector<Window> windows =
        regular_grid(area.height, area.width, grid);
    log_debug("tiled inference: " + std::to_string(windows.size()) +
              " windows of " + std::to_string(tile));

    std::vector<Tensor4> outputs(windows.size());
    const int nw = static_cast<int>(std::min<std::size_t>(
        static_cast<std::size_t>(std::max(threads, 1)), windows.size()));
    auto worker = [&](std::size_t lo, std::size_t hi) {
        Tensor4 x(1, area.bands, tile, tile);
        for (std::size_t k = lo; k < hi; ++k) {
            const Raster patch = window_read(area, windows[k]);
            std::memcpy(x.data.data(), patch.data.data(),
                        x.data.size() * sizeof(float));
            outputs[k] = unet_forward(cfg, params, x);
        }
    };
    if (nw <= 1) {
        worker(0, windows.size());
    } else {
        std::vector<std::thread> pool;
        const std::size_t per = (windows.size() + nw - 1) / nw;
        for (int t = 0; t < nw; ++t) {
            const std::size_t lo = per * static_cast<std::size_t>(t);
            const std::size_t hi =
                std::min(windows.size(), per * static_cast<std::size_t>(t + 1));
            if (lo >= hi) break;
            pool.emplace_back(worker, lo, hi);
        }
        for (auto& th : pool) th.join();
    }

    // deterministic accumulation in window order
    const std::size_t npix =
        static_cast<std::size_t>(area.height) * area.width;
    std::vector<double> sum(npix, 0.0);
    std::vector<std::uint32_t> cover(npix, 0);
    for (std::size_t k = 0; k < windows.size(); ++k) {
        const Window& w = windows[k];
        const Tensor4& out = outputs[k];
        for (int r = 0; r < tile; ++r) {
            const std::size_t dst =
                static_cast<std::size_t>(w.row_off + r) * area.width +
                static_cast<std::size_t>(w.col_off);
            const float* src =
                out.data.data() + static_cast<std::size_t>(r) * tile;
            for (int c = 0; c < tile; ++c) {
                sum[dst + c] += src[c];
                cover[dst + c] += 1;
            }
        }
    }

    Raster probs;
    probs.bands = 1;
    probs.height = area.height;
    probs.width = area.width;
    probs.transform = area.transform;
    probs.crs = area.crs;
    probs.data.resize(npix);
    for (std::size_t i = 0; i < npix; ++i) {
        if (cover[i] == 0)
            throw Error("inference_eval", "tiling left uncovered pixels");
        probs.data[i] = static_cast<float>(sum[i] / cover[i]);
    }
    return probs;
}

Mask binarize(const Raster& probs, double threshold) {
    if (probs.bands != 1)
        throw Error("inference_eval", "binarize expects a 1-band raster");
    if (!(threshold >= 0.0 && threshold <= 1.0))
        throw Error("inference_eval", "threshold must be in [0, 1]");
    Mask m;
    m.height = probs.height;
    m.width = probs.width;
    m.transform = probs.transform;
    m.crs = probs.crs;
    m.data.resize(probs.data.size());
    for (std::size_t i = 0; i < probs.data.size(); ++i)
        m.data[i] = probs.data[i] >= threshold ? 1 : 0;
    return m;
}

}  // namespace scarseg
