#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "scarseg/geo.hpp"

namespace scarseg {

// Multi-band float32 grid with a georeference. Values are stored
// band-sequential, row-major. Immutable by convention once loaded.
struct Raster {
    int bands = 0;
    int height = 0;
    int width = 0;
    GeoTransform transform;
    std::optional<float> nodata;
    std::string crs;  // free-text label, carried through for provenance
    std::vector<float> data;

    Raster() = default;
    Raster(int bands_, int height_, int width_, GeoTransform t = {})
        : bands(bands_), height(height_), width(width_), transform(t),
          data(static_cast<std::size_t>(bands_) * height_ * width_, 0.0f) {}

    std::size_t index(int band, int row, int col) const {
        return (static_cast<std::size_t>(band) * height + row) * width + col;
    }
    float at(int band, int row, int col) const { return data[index(band, row, col)]; }
    float& at(int band, int row, int col) { return data[index(band, row, col)]; }
    const float* band_ptr(int band) const {
        return data.data() + static_cast<std::size_t>(band) * height * width;
    }
    float* band_ptr(int band) {
        return data.data() + static_cast<std::size_t>(band) * height * width;
    }
    std::size_t pixels_per_band() const {
        return static_cast<std::size_t>(height) * width;
    }

    // Throws Error on broken invariants (size mismatch, non-finite values).
    void validate() const;
};

// Raster bundle I/O. A bundle is `<base>.json` (header) + `<base>.bin`
// (little-endian float32 payload). `path` may name the base, the .json or
// the .bin file.
Raster load_raster(const std::string& path);
void save_raster(const Raster& raster, const std::string& path);

// Bilinear resampling onto a square grid of `target_pixel` meters covering
// the same extent. Interpolation anchors at pixel centers; the stencil is
// clamped at the borders. Nodata inside the stencil propagates.
Raster resample_bilinear(const Raster& src, double target_pixel);

// Channel stack: optical bands first, DEM bands last. Grids must match to
// 1e-6 m.
Raster stack_bands(const Raster& optical, const Raster& dem);

// Copy of the window with a translated transform. Window must be in bounds.
Raster window_read(const Raster& raster, const Window& w);

// Per-channel (min, max) over all pixels, skipping nodata cells.
struct ChannelRange {
    float min = 0.0f;
    float max = 0.0f;
};
std::vector<ChannelRange> channel_ranges(const Raster& r);

// Min-max normalization of each channel to [0, 1] with the given constants
// (recorded in manifests so inference matches training). Constant channels
// and nodata cells map to 0.
Raster normalize_channels(const Raster& r, const std::vector<ChannelRange>& ranges);

}  // namespace scarseg
