#pragma once

// Internal helpers for the raster bundle container: a `<base>.json` header
// next to a `<base>.bin` payload. Shared by the float32 raster and u8 mask
// readers; not installed.

#include <bit>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "scarseg/geo.hpp"

static_assert(std::endian::native == std::endian::little,
              "bundle payloads are little-endian; big-endian hosts are unsupported");

namespace scarseg::detail {

struct BundleHeader {
    int bands = 0;
    int height = 0;
    int width = 0;
    std::string dtype;
    GeoTransform transform;
    std::optional<double> nodata;
    std::string crs;
};

// Accepts the base path, the .json path or the .bin path.
std::string bundle_base(const std::string& path);

BundleHeader read_bundle_header(const std::string& base);
void write_bundle_header(const std::string& base, const BundleHeader& h);

// Reads exactly `expected_bytes` from `<base>.bin`; anything else is a
// size-mismatch error attributed to `module`.
std::vector<std::uint8_t> read_bundle_payload(const std::string& base,
                                              std::size_t expected_bytes,
                                              const char* module);
void write_bundle_payload(const std::string& base, const void* bytes,
                          std::size_t size, const char* module);

}  // namespace scarseg::detail
