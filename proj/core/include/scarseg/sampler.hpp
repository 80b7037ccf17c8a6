#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "scarseg/mask.hpp"
#include "scarseg/raster.hpp"

namespace scarseg {

enum class SamplingMethod { regular, random };

const char* sampling_method_name(SamplingMethod m);
SamplingMethod parse_sampling_method(const std::string& name);

struct SamplingSpec {
    SamplingMethod method = SamplingMethod::regular;
    int patch_size = 64;
    double overlap_fraction = 0.2;  // regular grid only
    int n_candidates = 5000;        // random only
    std::uint64_t seed = 0;
};

// One aligned image/mask pair cut at source_window. transform_name is empty
// for originals and carries the augmentation id for derived copies.
struct PatchItem {
    Raster image;
    Mask mask;
    Window source_window;
    int source_index = -1;
    std::string transform_name;
};

struct PatchSet {
    std::vector<PatchItem> items;
    int patch_size = 0;
    int channels = 0;
    SamplingSpec spec;
    std::vector<ChannelRange> normalization;  // per channel, may be empty

    std::size_t size() const { return items.size(); }
};

// Fixed-stride tiling with stride = floor(patch_size * (1 - overlap)). When
// the stride does not land exactly on the far edge, a flush row/column is
// appended so the extent is fully covered. Row-major window order.
std::vector<Window> regular_grid(int height, int width, const SamplingSpec& spec);

// Exactly n_candidates windows with offsets drawn uniformly from the
// in-bounds range; duplicates permitted; reproducible per seed.
std::vector<Window> random_windows(int height, int width, const SamplingSpec& spec);

// Order-preserving filter keeping the windows that contain at least one
// mask pixel (the class-imbalance mitigation).
std::vector<Window> filter_intersecting(const std::vector<Window>& windows,
                                        const Mask& mask);

// Aligned image/mask patch pairs, one per window, in input order. Image and
// mask must share dimensions and transform; windows must be uniform squares.
PatchSet extract_patches(const Raster& image, const Mask& mask,
                         const std::vector<Window>& windows);

// Directory of numbered raster bundles plus an index.json manifest.
void save_patchset(const PatchSet& ps, const std::string& dir);
PatchSet load_patchset(const std::string& dir);

// One JSON object per line: {"col_off":..,"row_off":..,"width":..,"height":..}
void write_windows_jsonl(const std::vector<Window>& windows, const std::string& path);
std::vector<Window> read_windows_jsonl(const std::string& path);

}  // namespace scarseg
