#include "scarseg/augment.hpp"

#include <algorithm>

#include "scarseg/error.hpp"
#include "scarseg/rng.hpp"

namespace scarseg {

namespace {

constexpr const char* kModule = "augment";

bool needs_square(TransformId t) {
    return t != TransformId::flip_h && t != TransformId::flip_v;
}

// Source pixel (row, col) feeding output pixel (r, c) of an s-sized patch.
inline std::pair<int, int> source_of(TransformId t, int r, int c, int s) {
    switch (t) {
        case TransformId::rot90_k1: return {c, s - 1 - r};
        case TransformId::rot90_k2: return {s - 1 - r, s - 1 - c};
        case TransformId::rot90_k3: return {s - 1 - c, r};
        case TransformId::flip_h: return {r, s - 1 - c};
        case TransformId::flip_v: return {s - 1 - r, c};
        case TransformId::flip_h_rot90_k1: return {s - 1 - c, s - 1 - r};
        case TransformId::flip_v_rot90_k1: return {c, r};
    }
    return {r, c};
}

}  // namespace

const char* transform_name(TransformId t) {
    switch (t) {
        case TransformId::rot90_k1: return "rot90_k1";
        case TransformId::rot90_k2: return "rot90_k2";
        case TransformId::rot90_k3: return "rot90_k3";
        case TransformId::flip_h: return "flip_h";
        case TransformId::flip_v: return "flip_v";
        case TransformId::flip_h_rot90_k1: return "flip_h_rot90_k1";
        case TransformId::flip_v_rot90_k1: return "flip_v_rot90_k1";
    }
    return "?";
}

TransformId parse_transform(const std::string& name) {
    for (TransformId t : kTransformPool)
        if (name == transform_name(t)) return t;
    throw Error(kModule, "unknown transform \"" + name + "\"");
}

TransformId transform_inverse(TransformId t) {
    switch (t) {
        case TransformId::rot90_k1: return TransformId::rot90_k3;
        case TransformId::rot90_k3: return TransformId::rot90_k1;
        default: return t;  // the rest are involutions
    }
}

std::pair<Raster, Mask> apply_transform(const Raster& image, const Mask& mask,
                                        TransformId t) {
    if (image.height != mask.height || image.width != mask.width)
        throw Error(kModule, "image and mask dimensions differ");
    if (needs_square(t) && image.height != image.width)
        throw Error(kModule, std::string("transform ") + transform_name(t) +
                                 " requires a square patch");
    const int s = image.height;  // flips also work rectangular, but patches are square
    if (image.width != s)
        throw Error(kModule, "patches must be square");

    Raster out_img(image.bands, s, s, image.transform);
    out_img.nodata = image.nodata;
    out_img.crs = image.crs;
    for (int b = 0; b < image.bands; ++b) {
        const float* sp = image.band_ptr(b);
        float* op = out_img.band_ptr(b);
        for (int r = 0; r < s; ++r)
            for (int c = 0; c < s; ++c) {
                const auto [sr, sc] = source_of(t, r, c, s);
                op[static_cast<std::size_t>(r) * s + c] =
                    sp[static_cast<std::size_t>(sr) * s + sc];
            }
    }

    Mask out_mask(s, s, mask.transform);
    out_mask.crs = mask.crs;
    for (int r = 0; r < s; ++r)
        for (int c = 0; c < s; ++c) {
            const auto [sr, sc] = source_of(t, r, c, s);
            out_mask.at(r, c) = mask.at(sr, sc);
        }
    return {std::move(out_img), std::move(out_mask)};
}

PatchSet augment_dataset(const PatchSet& ps, const AugmentSpec& spec) {
    if (ps.items.empty()) throw Error(kModule, "empty patch set");
    if (spec.copies_per_patch < 0)
        throw Error(kModule, "copies_per_patch must be >= 0");
    if (spec.copies_per_patch > static_cast<int>(kTransformPool.size()))
        throw Error(kModule, "copies_per_patch exceeds the transform pool size (" +
                                 std::to_string(kTransformPool.size()) + ")");

    PatchSet out;
    out.patch_size = ps.patch_size;
    out.channels = ps.channels;
    out.spec = ps.spec;
    out.normalization = ps.normalization;
    out.items.reserve(ps.items.size() * (1 + spec.copies_per_patch));
    out.items = ps.items;

    for (std::size_t i = 0; i < ps.items.size(); ++i) {
        // Per-patch derived stream keeps augmentation order-independent.
        Rng rng(spec.seed ^ static_cast<std::uint64_t>(i));
        std::array<int, 7> pool_idx = {0, 1, 2, 3, 4, 5, 6};
        for (int k = 0; k < spec.copies_per_patch; ++k) {
            const int j = k + static_cast<int>(rng.bounded(pool_idx.size() - k));
            std::swap(pool_idx[k], pool_idx[j]);
            const TransformId t = kTransformPool[pool_idx[k]];

            const PatchItem& src = ps.items[i];
            auto [img, msk] = apply_transform(src.image, src.mask, t);
            PatchItem item;
            item.image = std::move(img);
            item.mask = std::move(msk);
            item.source_window = src.source_window;
            item.source_index = static_cast<int>(i);
            item.transform_name = transform_name(t);
            out.items.push_back(std::move(item));
        }
    }
    return out;
}

}  // namespace scarseg
