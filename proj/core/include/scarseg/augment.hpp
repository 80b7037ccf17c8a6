#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <utility>

#include "scarseg/sampler.hpp"

namespace scarseg {

// Pure spatial permutations of a square patch. Composition reads right to
// left: flip_h_rot90_k1 rotates first, then flips.
enum class TransformId {
    rot90_k1,  // 90 degrees counter-clockwise
    rot90_k2,
    rot90_k3,
    flip_h,
    flip_v,
    flip_h_rot90_k1,
    flip_v_rot90_k1,
};

inline constexpr std::array<TransformId, 7> kTransformPool = {
    TransformId::rot90_k1,       TransformId::rot90_k2, TransformId::rot90_k3,
    TransformId::flip_h,         TransformId::flip_v,   TransformId::flip_h_rot90_k1,
    TransformId::flip_v_rot90_k1};

const char* transform_name(TransformId t);
TransformId parse_transform(const std::string& name);
TransformId transform_inverse(TransformId t);

struct AugmentSpec {
    int copies_per_patch = 2;
    std::uint64_t seed = 0;
};

// Applies the identical permutation to every image channel and to the mask.
// Rotations and transposes require square patches.
std::pair<Raster, Mask> apply_transform(const Raster& image, const Mask& mask,
                                        TransformId t);

// All originals first, then copies_per_patch transformed copies per patch in
// source order. Transforms are drawn without replacement per patch, so the
// identity never appears and no copy repeats.
PatchSet augment_dataset(const PatchSet& ps, const AugmentSpec& spec);

}  // namespace scarseg
