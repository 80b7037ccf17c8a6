#pragma once

#include <cmath>
#include <cstdint>

namespace scarseg {

// Axis-aligned affine grid georeference. pixel_h is applied downward: row r
// spans world y in [origin_y - (r+1)*pixel_h, origin_y - r*pixel_h].
struct GeoTransform {
    double origin_x = 0.0;  // world x of the top-left corner, meters
    double origin_y = 0.0;  // world y of the top-left corner, meters
    double pixel_w = 1.0;   // meters per pixel, > 0
    double pixel_h = 1.0;   // meters per pixel, > 0, downward

    bool valid() const { return pixel_w > 0.0 && pixel_h > 0.0; }

    bool almost_equal(const GeoTransform& other, double tol_m = 1e-6) const {
        return std::fabs(origin_x - other.origin_x) <= tol_m &&
               std::fabs(origin_y - other.origin_y) <= tol_m &&
               std::fabs(pixel_w - other.pixel_w) <= tol_m &&
               std::fabs(pixel_h - other.pixel_h) <= tol_m;
    }
};

struct PixelIndex {
    std::int64_t col = 0;
    std::int64_t row = 0;
};

struct WorldPoint {
    double x = 0.0;
    double y = 0.0;
};

// Floor-based indexing; may return out-of-range indices, callers bounds-check.
inline PixelIndex world_to_pixel(const GeoTransform& t, double x, double y) {
    return {static_cast<std::int64_t>(std::floor((x - t.origin_x) / t.pixel_w)),
            static_cast<std::int64_t>(std::floor((t.origin_y - y) / t.pixel_h))};
}

// Center of pixel (col, row).
inline WorldPoint pixel_to_world(const GeoTransform& t, std::int64_t col, std::int64_t row) {
    return {t.origin_x + (static_cast<double>(col) + 0.5) * t.pixel_w,
            t.origin_y - (static_cast<double>(row) + 0.5) * t.pixel_h};
}

// Pixel-space rectangle; the unit of sampling, patch extraction and tiling.
struct Window {
    int col_off = 0;
    int row_off = 0;
    int width = 0;
    int height = 0;

    bool operator==(const Window&) const = default;

    bool in_bounds(int raster_height, int raster_width) const {
        return width > 0 && height > 0 && col_off >= 0 && row_off >= 0 &&
               col_off + width <= raster_width && row_off + height <= raster_height;
    }
};

// Transform of a window-read: same grid, shifted origin.
inline GeoTransform shift_transform(const GeoTransform& t, int col_off, int row_off) {
    GeoTransform out = t;
    out.origin_x += col_off * t.pixel_w;
    out.origin_y -= row_off * t.pixel_h;
    return out;
}

}  // namespace scarseg
