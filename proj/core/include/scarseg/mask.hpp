#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "scarseg/geo.hpp"
#include "scarseg/polygon.hpp"

namespace scarseg {

// Single-band 0/1 grid aligned with a raster.
struct Mask {
    int height = 0;
    int width = 0;
    GeoTransform transform;
    std::string crs;
    std::vector<std::uint8_t> data;

    Mask() = default;
    Mask(int height_, int width_, GeoTransform t = {})
        : height(height_), width(width_), transform(t),
          data(static_cast<std::size_t>(height_) * width_, 0) {}

    std::size_t index(int row, int col) const {
        return static_cast<std::size_t>(row) * width + col;
    }
    std::uint8_t at(int row, int col) const { return data[index(row, col)]; }
    std::uint8_t& at(int row, int col) { return data[index(row, col)]; }

    std::uint64_t count_ones() const;
    void validate() const;  // throws on values outside {0,1}
};

// Pixel-center, even-odd rasterization: a pixel is 1 iff its center lies
// inside any polygon; holes subtract. Scanline fills are half-open
// (left-inclusive) so adjacent polygons never double-book a pixel.
Mask rasterize(const PolygonSet& ps, const GeoTransform& t, int height, int width);

// True iff any pixel of the window is 1. Window must be in bounds.
bool mask_intersects_window(const Mask& m, const Window& w);

// Bundle I/O with dtype "u8" (same container as rasters).
Mask load_mask(const std::string& path);
void save_mask(const Mask& mask, const std::string& path);

Mask mask_window(const Mask& m, const Window& w);

}  // namespace scarseg
