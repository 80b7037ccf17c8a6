#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "scarseg/checkpoint.hpp"
#include "scarseg/sampler.hpp"
#include "scarseg/unet.hpp"

namespace scarseg {

struct TrainConfig {
    int epochs = 200;
    double learning_rate = 0.001;
    int batch_size = 16;
    double val_fraction = 0.3;
    std::uint64_t shuffle_seed = 0;
    int threads = 1;  // batch-level parallelism; 1 = bit-exact sequential

    void validate() const;
};

struct EpochStats {
    int epoch = 0;  // 1-based
    double train_loss = 0;
    double val_loss = 0;
    double seconds = 0;
    bool saved = false;
};

using TrainHistory = std::vector<EpochStats>;

struct TrainResult {
    std::string checkpoint_dir;
    TrainHistory history;
    int best_epoch = -1;
    double best_val_loss = 0;
};

// Seeded-shuffle split; |val| = round(val_fraction * |ps|). Throws if either
// side would be empty.
std::pair<PatchSet, PatchSet> split_train_val(const PatchSet& ps,
                                              double val_fraction,
                                              std::uint64_t seed);

// Full training loop: per-epoch reshuffle, mini-batches with the last
// partial batch kept, Adam updates, validation after every epoch, and a
// checkpoint written to out_dir only on strict val-loss improvement.
// Appends one row per epoch to <out_dir>/history.csv.
TrainResult train(const TrainConfig& cfg, const UNetConfig& net_cfg,
                  const PatchSet& ps, const std::string& out_dir);

// Mean BCE of the model over a list of patches (no gradient). Used for the
// validation pass and for re-evaluation checks.
double evaluate_loss(const UNetConfig& cfg, const UNetParams& params,
                     const std::vector<PatchItem>& items, int threads = 1);

}  // namespace scarseg
