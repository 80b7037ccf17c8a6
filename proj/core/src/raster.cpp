#include "scarseg/raster.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#include "bundle.hpp"
#include "scarseg/error.hpp"

namespace scarseg {

namespace {
constexpr const char* kModule = "raster_core";
}

void Raster::validate() const {
    if (bands < 1 || height < 1 || width < 1)
        throw Error(kModule, "raster has empty dimensions");
    if (!transform.valid())
        throw Error(kModule, "raster has non-positive pixel size");
    const std::size_t expected = static_cast<std::size_t>(bands) * height * width;
    if (data.size() != expected)
        throw Error(kModule, "size mismatch: " + std::to_string(data.size()) +
                                 " values for " + std::to_string(bands) + "x" +
                                 std::to_string(height) + "x" + std::to_string(width));
    for (float v : data) {
        if (!std::isfinite(v) && !(nodata && v == *nodata))
            throw Error(kModule, "raster contains non-finite values");
    }
}

Raster load_raster(const std::string& path) {
    const std::string base = detail::bundle_base(path);
    const detail::BundleHeader h = detail::read_bundle_header(base);
    if (h.dtype != "f32le")
        throw Error(kModule, "unsupported dtype \"" + h.dtype + "\" in " + base +
                                 ".json (expected f32le)");
    Raster r(h.bands, h.height, h.width, h.transform);
    r.crs = h.crs;
    if (h.nodata) r.nodata = static_cast<float>(*h.nodata);
    const std::size_t bytes = r.data.size() * sizeof(float);
    const auto payload = detail::read_bundle_payload(base, bytes, kModule);
    std::memcpy(r.data.data(), payload.data(), bytes);
    return r;
}

void save_raster(const Raster& raster, const std::string& path) {
    raster.validate();
    const std::string base = detail::bundle_base(path);
    detail::BundleHeader h;
    h.bands = raster.bands;
    h.height = raster.height;
    h.width = raster.width;
    h.dtype = "f32le";
    h.transform = raster.transform;
    if (raster.nodata) h.nodata = static_cast<double>(*raster.nodata);
    h.crs = raster.crs;
    detail::write_bundle_header(base, h);
    detail::write_bundle_payload(base, raster.data.data(),
                                 raster.data.size() * sizeof(float), kModule);
}

Raster resample_bilinear(const Raster& src, double target_pixel) {
    if (target_pixel <= 0.0) throw Error(kModule, "target pixel size must be > 0");
    if (!src.transform.valid()) throw Error(kModule, "source transform invalid");

    const int out_w = static_cast<int>(
        std::ceil(static_cast<double>(src.width) * src.transform.pixel_w / target_pixel));
    const int out_h = static_cast<int>(
        std::ceil(static_cast<double>(src.height) * src.transform.pixel_h / target_pixel));

    GeoTransform t = src.transform;
    t.pixel_w = target_pixel;
    t.pixel_h = target_pixel;
    Raster out(src.bands, out_h, out_w, t);
    out.nodata = src.nodata;
    out.crs = src.crs;

    const double sx = target_pixel / src.transform.pixel_w;
    const double sy = target_pixel / src.transform.pixel_h;
    const bool has_nodata = src.nodata.has_value();
    const float nodata = has_nodata ? *src.nodata : 0.0f;

    for (int b = 0; b < src.bands; ++b) {
        const float* sp = src.band_ptr(b);
        float* op = out.band_ptr(b);
        for (int r = 0; r < out_h; ++r) {
            // Fractional source row of this output pixel center.
            const double v = (static_cast<double>(r) + 0.5) * sy - 0.5;
            int r0 = static_cast<int>(std::floor(v));
            double fy = v - r0;
            int r1 = r0 + 1;
            r0 = std::clamp(r0, 0, src.height - 1);
            r1 = std::clamp(r1, 0, src.height - 1);
            for (int c = 0; c < out_w; ++c) {
                const double u = (static_cast<double>(c) + 0.5) * sx - 0.5;
                int c0 = static_cast<int>(std::floor(u));
                double fx = u - c0;
                int c1 = c0 + 1;
                c0 = std::clamp(c0, 0, src.width - 1);
                c1 = std::clamp(c1, 0, src.width - 1);

                const float v00 = sp[static_cast<std::size_t>(r0) * src.width + c0];
                const float v01 = sp[static_cast<std::size_t>(r0) * src.width + c1];
                const float v10 = sp[static_cast<std::size_t>(r1) * src.width + c0];
                const float v11 = sp[static_cast<std::size_t>(r1) * src.width + c1];
                if (has_nodata &&
                    (v00 == nodata || v01 == nodata || v10 == nodata || v11 == nodata)) {
                    op[static_cast<std::size_t>(r) * out_w + c] = nodata;
                    continue;
                }
                const double top = v00 + fx * (v01 - v00);
                const double bot = v10 + fx * (v11 - v10);
                op[static_cast<std::size_t>(r) * out_w + c] =
                    static_cast<float>(top + fy * (bot - top));
            }
        }
    }
    return out;
}

Raster stack_bands(const Raster& optical, const Raster& dem) {
    if (optical.height != dem.height || optical.width != dem.width)
        throw Error(kModule, "grid mismatch: dimensions differ (" +
                                 std::to_string(optical.height) + "x" +
                                 std::to_string(optical.width) + " vs " +
                                 std::to_string(dem.height) + "x" +
                                 std::to_string(dem.width) + ")");
    if (!optical.transform.almost_equal(dem.transform))
        throw Error(kModule, "grid mismatch: transforms differ beyond 1e-6 m");

    Raster out(optical.bands + dem.bands, optical.height, optical.width, optical.transform);
    out.nodata = optical.nodata ? optical.nodata : dem.nodata;
    out.crs = optical.crs;
    const std::size_t plane = out.pixels_per_band();
    std::memcpy(out.data.data(), optical.data.data(),
                optical.data.size() * sizeof(float));
    std::memcpy(out.data.data() + static_cast<std::size_t>(optical.bands) * plane,
                dem.data.data(), dem.data.size() * sizeof(float));
    return out;
}

Raster window_read(const Raster& raster, const Window& w) {
    if (!w.in_bounds(raster.height, raster.width))
        throw Error(kModule, "window out of bounds");
    Raster out(raster.bands, w.height, w.width,
               shift_transform(raster.transform, w.col_off, w.row_off));
    out.nodata = raster.nodata;
    out.crs = raster.crs;
    for (int b = 0; b < raster.bands; ++b) {
        const float* sp = raster.band_ptr(b);
        float* op = out.band_ptr(b);
        for (int r = 0; r < w.height; ++r) {
            std::memcpy(op + static_cast<std::size_t>(r) * w.width,
                        sp + (static_cast<std::size_t>(w.row_off) + r) * raster.width +
                            w.col_off,
                        static_cast<std::size_t>(w.width) * sizeof(float));
        }
    }
    return out;
}

std::vector<ChannelRange> channel_ranges(const Raster& r) {
    std::vector<ChannelRange> ranges(r.bands);
    for (int b = 0; b < r.bands; ++b) {
        const float* p = r.band_ptr(b);
        float lo = 0.0f, hi = 0.0f;
        bool seen = false;
        for (std::size_t i = 0; i < r.pixels_per_band(); ++i) {
            if (r.nodata && p[i] == *r.nodata) continue;
            if (!seen) {
                lo = hi = p[i];
                seen = true;
            } else {
                lo = std::min(lo, p[i]);
                hi = std::max(hi, p[i]);
            }
        }
        ranges[b] = {lo, hi};
    }
    return ranges;
}

Raster normalize_channels(const Raster& r, const std::vector<ChannelRange>& ranges) {
    if (static_cast<int>(ranges.size()) != r.bands)
        throw Error(kModule, "normalization constants cover " +
                                 std::to_string(ranges.size()) + " channels, raster has " +
                                 std::to_string(r.bands));
    Raster out(r.bands, r.height, r.width, r.transform);
    out.crs = r.crs;
    for (int b = 0; b < r.bands; ++b) {
        const float* sp = r.band_ptr(b);
        float* op = out.band_ptr(b);
        const float lo = ranges[b].min;
        const float span = ranges[b].max - ranges[b].min;
        const float inv = span > 0.0f ? 1.0f / span : 0.0f;
        for (std::size_t i = 0; i < r.pixels_per_band(); ++i) {
            if (r.nodata && sp[i] == *r.nodata) {
                op[i] = 0.0f;
            } else {
                op[i] = std::clamp((sp[i] - lo) * inv, 0.0f, 1.0f);
            }
        }
    }
    return out;
}

}  // namespace scarseg
