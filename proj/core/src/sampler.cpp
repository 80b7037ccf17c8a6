#include "scarseg/sampler.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "scarseg/error.hpp"
#include "scarseg/rng.hpp"

namespace scarseg {

namespace {

constexpr const char* kModule = "sampler";

using nlohmann::json;

void check_spec(const SamplingSpec& spec) {
    if (spec.patch_size < 2) throw Error(kModule, "patch_size must be >= 2");
    if (spec.overlap_fraction < 0.0 || spec.overlap_fraction >= 1.0)
        throw Error(kModule, "overlap_fraction must be in [0, 1)");
    if (spec.n_candidates < 1) throw Error(kModule, "n_candidates must be >= 1");
}

// Tiling offsets along one axis, flush-edge rule included.
std::vector<int> axis_offsets(int extent, int patch, int stride) {
    std::vector<int> offsets;
    for (int off = 0; off + patch <= extent; off += stride) offsets.push_back(off);
    if (offsets.back() + patch < extent) offsets.push_back(extent - patch);
    return offsets;
}

json window_to_json(const Window& w) {
    return json{{"col_off", w.col_off},
                {"row_off", w.row_off},
                {"width", w.width},
                {"height", w.height}};
}

Window window_from_json(const json& j) {
    return Window{j.at("col_off").get<int>(), j.at("row_off").get<int>(),
                  j.at("width").get<int>(), j.at("height").get<int>()};
}

std::string item_name(const char* prefix, std::size_t i) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%s_%06zu", prefix, i);
    return buf;
}

}  // namespace

const char* sampling_method_name(SamplingMethod m) {
    return m == SamplingMethod::regular ? "regular" : "random";
}

SamplingMethod parse_sampling_method(const std::string& name) {
    if (name == "regular") return SamplingMethod::regular;
    if (name == "random") return SamplingMethod::random;
    throw Error(kModule, "unknown sampling method \"" + name + "\"");
}

std::vector<Window> regular_grid(int height, int width, const SamplingSpec& spec) {
    check_spec(spec);
    if (spec.method != SamplingMethod::regular)
        throw Error(kModule, "regular_grid requires method=regular");
    const int patch = spec.patch_size;
    if (height < patch || width < patch)
        throw Error(kModule, "extent smaller than patch size");
    const int stride = static_cast<int>(
        std::floor(patch * (1.0 - spec.overlap_fraction)));
    const std::vector<int> rows = axis_offsets(height, patch, std::max(stride, 1));
    const std::vector<int> cols = axis_offsets(width, patch, std::max(stride, 1));
    std::vector<Window> windows;
    windows.reserve(rows.size() * cols.size());
    for (int r : rows)
        for (int c : cols) windows.push_back({c, r, patch, patch});
    return windows;
}

std::vector<Window> random_windows(int height, int width, const SamplingSpec& spec) {
    check_spec(spec);
    if (spec.method != SamplingMethod::random)
        throw Error(kModule, "random_windows requires method=random");
    const int patch = spec.patch_size;
    if (height < patch || width < patch)
        throw Error(kModule, "extent smaller than patch size");
    const std::uint64_t col_range = static_cast<std::uint64_t>(width - patch) + 1;
    const std::uint64_t row_range = static_cast<std::uint64_t>(height - patch) + 1;
    Rng rng(spec.seed);
    std::vector<Window> windows;
    windows.reserve(spec.n_candidates);
    for (int i = 0; i < spec.n_candidates; ++i) {
        const int col = static_cast<int>(rng.bounded(col_range));
        const int row = static_cast<int>(rng.bounded(row_range));
        windows.push_back({col, row, patch, patch});
    }
    return windows;
}

std::vector<Window> filter_intersecting(const std::vector<Window>& windows,
                                        const Mask& mask) {
    std::vector<Window> kept;
    kept.reserve(windows.size());
    for (const Window& w : windows)
        if (mask_intersects_window(mask, w)) kept.push_back(w);
    return kept;
}

PatchSet extract_patches(const Raster& image, const Mask& mask,
                         const std::vector<Window>& windows) {
    if (image.height != mask.height || image.width != mask.width)
        throw Error(kModule, "grid mismatch between image and mask dimensions");
    if (!image.transform.almost_equal(mask.transform))
        throw Error(kModule, "grid mismatch between image and mask transforms");

    PatchSet ps;
    ps.channels = image.bands;
    if (!windows.empty()) {
        if (windows.front().width != windows.front().height)
            throw Error(kModule, "patch windows must be square");
        ps.patch_size = windows.front().width;
    }
    ps.items.reserve(windows.size());
    for (std::size_t i = 0; i < windows.size(); ++i) {
        const Window& w = windows[i];
        if (w.width != ps.patch_size || w.height != ps.patch_size)
            throw Error(kModule, "patch windows must share one size");
        PatchItem item;
        item.image = window_read(image, w);
        item.mask = mask_window(mask, w);
        item.source_window = w;
        item.source_index = static_cast<int>(i);
        ps.items.push_back(std::move(item));
    }
    return ps;
}

void save_patchset(const PatchSet& ps, const std::string& dir) {
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw Error(kModule, "cannot create directory " + dir);

    json items = json::array();
    for (std::size_t i = 0; i < ps.items.size(); ++i) {
        const PatchItem& item = ps.items[i];
        const std::string img = item_name("img", i);
        const std::string msk = item_name("msk", i);
        save_raster(item.image, (fs::path(dir) / img).string());
        save_mask(item.mask, (fs::path(dir) / msk).string());
        items.push_back({{"image", img},
                         {"mask", msk},
                         {"window", window_to_json(item.source_window)},
                         {"source_index", item.source_index},
                         {"transform", item.transform_name.empty()
                                           ? json(nullptr)
                                           : json(item.transform_name)}});
    }

    json index{{"patch_size", ps.patch_size},
               {"channels", ps.channels},
               {"count", ps.items.size()},
               {"spec",
                {{"method", sampling_method_name(ps.spec.method)},
                 {"patch_size", ps.spec.patch_size},
                 {"overlap_fraction", ps.spec.overlap_fraction},
                 {"n_candidates", ps.spec.n_candidates},
                 {"seed", ps.spec.seed}}},
               {"items", items}};
    if (!ps.normalization.empty()) {
        json mins = json::array(), maxs = json::array();
        for (const ChannelRange& r : ps.normalization) {
            mins.push_back(r.min);
            maxs.push_back(r.max);
        }
        index["normalization"] = {{"min", mins}, {"max", maxs}};
    } else {
        index["normalization"] = nullptr;
    }

    std::ofstream out(fs::path(dir) / "index.json");
    if (!out) throw Error(kModule, "cannot write index.json in " + dir);
    out << index.dump(2) << '\n';
    if (!out) throw Error(kModule, "write failed for index.json in " + dir);
}

PatchSet load_patchset(const std::string& dir) {
    namespace fs = std::filesystem;
    std::ifstream in(fs::path(dir) / "index.json");
    if (!in) throw Error(kModule, "cannot open index.json in " + dir);
    json index;
    try {
        in >> index;
    } catch (const json::exception& e) {
        throw Error(kModule, "malformed index.json in " + dir + ": " + e.what());
    }

    PatchSet ps;
    try {
        ps.patch_size = index.at("patch_size").get<int>();
        ps.channels = index.at("channels").get<int>();
        const auto& spec = index.at("spec");
        ps.spec.method = parse_sampling_method(spec.at("method").get<std::string>());
        ps.spec.patch_size = spec.at("patch_size").get<int>();
        ps.spec.overlap_fraction = spec.at("overlap_fraction").get<double>();
        ps.spec.n_candidates = spec.at("n_candidates").get<int>();
        ps.spec.seed = spec.at("seed").get<std::uint64_t>();
        if (index.contains("normalization") && !index.at("normalization").is_null()) {
            const auto& norm = index.at("normalization");
            const auto& mins = norm.at("min");
            const auto& maxs = norm.at("max");
            for (std::size_t i = 0; i < mins.size(); ++i)
                ps.normalization.push_back(
                    {mins[i].get<float>(), maxs[i].get<float>()});
        }
        for (const auto& entry : index.at("items")) {
            PatchItem item;
            item.image = load_raster((fs::path(dir) / entry.at("image").get<std::string>()).string());
            item.mask = load_mask((fs::path(dir) / entry.at("mask").get<std::string>()).string());
            item.source_window = window_from_json(entry.at("window"));
            item.source_index = entry.value("source_index", -1);
            if (entry.contains("transform") && !entry.at("transform").is_null())
                item.transform_name = entry.at("transform").get<std::string>();
            ps.items.push_back(std::move(item));
        }
    } catch (const json::exception& e) {
        throw Error(kModule, "incomplete index.json in " + dir + ": " + e.what());
    }
    if (index.contains("count") &&
        index.at("count").get<std::size_t>() != ps.items.size())
        throw Error(kModule, "index.json count disagrees with item list in " + dir);
    return ps;
}

void write_windows_jsonl(const std::vector<Window>& windows, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error(kModule, "cannot write " + path);
    for (const Window& w : windows) out << window_to_json(w).dump() << '\n';
    if (!out) throw Error(kModule, "write failed for " + path);
}

std::vector<Window> read_windows_jsonl(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(kModule, "cannot open " + path);
    std::vector<Window> windows;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        try {
            windows.push_back(window_from_json(json::parse(line)));
        } catch (const json::exception& e) {
            throw Error(kModule, "malformed window line in " + path + ": " + e.what());
        }
    }
    return windows;
}

}  // namespace scarseg
