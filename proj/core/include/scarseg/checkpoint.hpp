#pragma once

// Checkpoint = weights.json manifest + weights.bin float32 payload.
// The manifest records the architecture, tensor layout (name/shape/offset),
// training provenance (seed, epoch, val_loss) and, when available, the
// per-channel normalization ranges so inference can reproduce the exact
// input scaling used in training.

#include <cstdint>
#include <string>
#include <vector>

#include "scarseg/raster.hpp"
#include "scarseg/unet.hpp"

namespace scarseg {

struct CheckpointMeta {
    std::uint64_t seed = 0;
    int epoch = -1;       // -1: never trained
    double val_loss = 0;  // meaningful only when epoch >= 0
    std::vector<ChannelRange> normalization;  // empty = not recorded
};

struct Checkpoint {
    UNetConfig config;
    UNetParams params;
    CheckpointMeta meta;
};

// Writes <dir>/weights.json and <dir>/weights.bin, creating dir if needed.
void save_checkpoint(const std::string& dir, const UNetConfig& cfg,
                     const UNetParams& params, const CheckpointMeta& meta);

// Accepts the checkpoint directory or a direct path to weights.json.
Checkpoint load_checkpoint(const std::string& path);

}  // namespace scarseg
