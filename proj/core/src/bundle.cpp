#include "bundle.hpp"

#include <fstream>

#include <json.hpp>

#include "scarseg/error.hpp"

namespace scarseg::detail {

using nlohmann::json;

std::string bundle_base(const std::string& path) {
    auto strip = [&](const char* ext) -> std::optional<std::string> {
        std::string e(ext);
        if (path.size() > e.size() && path.compare(path.size() - e.size(), e.size(), e) == 0)
            return path.substr(0, path.size() - e.size());
        return std::nullopt;
    };
    if (auto b = strip(".json")) return *b;
    if (auto b = strip(".bin")) return *b;
    return path;
}

BundleHeader read_bundle_header(const std::string& base) {
    const std::string sidecar = base + ".json";
    std::ifstream in(sidecar);
    if (!in) throw Error("raster_core", "cannot open " + sidecar);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw Error("raster_core", "malformed sidecar " + sidecar + ": " + e.what());
    }
    BundleHeader h;
    try {
        h.bands = j.at("bands").get<int>();
        h.height = j.at("height").get<int>();
        h.width = j.at("width").get<int>();
        h.dtype = j.at("dtype").get<std::string>();
        h.transform.origin_x = j.at("origin_x").get<double>();
        h.transform.origin_y = j.at("origin_y").get<double>();
        h.transform.pixel_w = j.at("pixel_w").get<double>();
        h.transform.pixel_h = j.at("pixel_h").get<double>();
        if (j.contains("nodata") && !j.at("nodata").is_null())
            h.nodata = j.at("nodata").get<double>();
        if (j.contains("crs") && j.at("crs").is_string())
            h.crs = j.at("crs").get<std::string>();
    } catch (const json::exception& e) {
        throw Error("raster_core", "incomplete sidecar " + sidecar + ": " + e.what());
    }
    if (h.bands < 1 || h.height < 1 || h.width < 1)
        throw Error("raster_core", "invalid dimensions in " + sidecar);
    if (!h.transform.valid())
        throw Error("raster_core", "non-positive pixel size in " + sidecar);
    return h;
}

void write_bundle_header(const std::string& base, const BundleHeader& h) {
    json j{{"bands", h.bands},
           {"height", h.height},
           {"width", h.width},
           {"dtype", h.dtype},
           {"origin_x", h.transform.origin_x},
           {"origin_y", h.transform.origin_y},
           {"pixel_w", h.transform.pixel_w},
           {"pixel_h", h.transform.pixel_h},
           {"nodata", h.nodata ? json(*h.nodata) : json(nullptr)},
           {"crs", h.crs}};
    const std::string sidecar = base + ".json";
    std::ofstream out(sidecar);
    if (!out) throw Error("raster_core", "cannot write " + sidecar);
    out << j.dump(2) << '\n';
    if (!out) throw Error("raster_core", "write failed for " + sidecar);
}

std::vector<std::uint8_t> read_bundle_payload(const std::string& base,
                                              std::size_t expected_bytes,
                                              const char* module) {
    const std::string payload = base + ".bin";
    std::ifstream in(payload, std::ios::binary);
    if (!in) throw Error(module, "cannot open " + payload);
    in.seekg(0, std::ios::end);
    const auto actual = static_cast<std::size_t>(in.tellg());
    if (actual != expected_bytes)
        throw Error(module, "size mismatch in " + payload + ": header implies " +
                                std::to_string(expected_bytes) + " bytes, file has " +
                                std::to_string(actual));
    in.seekg(0, std::ios::beg);
    std::vector<std::uint8_t> bytes(expected_bytes);
    in.read(reinterpret_cast<char*>(bytes.data()),
            static_cast<std::streamsize>(expected_bytes));
    if (!in) throw Error(module, "read failed for " + payload);
    return bytes;
}

void write_bundle_payload(const std::string& base, const void* bytes,
                          std::size_t size, const char* module) {
    const std::string payload = base + ".bin";
    std::ofstream out(payload, std::ios::binary);
    if (!out) throw Error(module, "cannot write " + payload);
    out.write(static_cast<const char*>(bytes), static_cast<std::streamsize>(size));
    if (!out) throw Error(module, "write failed for " + payload);
}

}  // namespace scarseg::detail
