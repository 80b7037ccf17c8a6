#pragma once

#include "scarseg/mask.hpp"
#include "scarseg/raster.hpp"
#include "scarseg/unet.hpp"

namespace scarseg {

// Sliding-window inference: tiles from the regular grid (stride
// floor(tile*(1-overlap)), flush edges), per-pixel probability = mean over
// all covering tiles. Tiles run in parallel when threads > 1; accumulation
// happens in window order so results do not depend on the thread count.
// Returns a 1-band probability raster with the area's georeferencing.
Raster predict_tiled(const UNetConfig& cfg, const UNetParams& params,
                     const Raster& area, int tile,
                     double overlap_fraction = 0.5, int threads = 1);

// 1 where prob >= threshold. threshold must lie in [0, 1].
Mask binarize(const Raster& probs, double threshold = 0.5);

}  // namespace scarseg
