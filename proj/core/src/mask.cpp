#include "scarseg/mask.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#include "bundle.hpp"
#include "scarseg/error.hpp"

namespace scarseg {

namespace {

constexpr const char* kModule = "vector_mask";

// Crossings of the horizontal line y with every ring of the polygon. The
// strict-inequality pairing makes vertices on the line count exactly once.
void collect_crossings(const Polygon& p, double y, std::vector<double>& xs) {
    xs.clear();
    auto scan_ring = [&](const Ring& ring) {
        for (std::size_t i = 0; i + 1 < ring.size(); ++i) {
            const double y0 = ring[i][1], y1 = ring[i + 1][1];
            if ((y0 > y) == (y1 > y)) continue;
            const double x0 = ring[i][0], x1 = ring[i + 1][0];
            xs.push_back(x0 + (y - y0) * (x1 - x0) / (y1 - y0));
        }
    };
    scan_ring(p.exterior);
    for (const auto& hole : p.holes) scan_ring(hole);
    std::sort(xs.begin(), xs.end());
}

}  // namespace

std::uint64_t Mask::count_ones() const {
    std::uint64_t n = 0;
    for (std::uint8_t v : data) n += v;
    return n;
}

void Mask::validate() const {
    if (height < 1 || width < 1) throw Error(kModule, "mask has empty dimensions");
    if (data.size() != static_cast<std::size_t>(height) * width)
        throw Error(kModule, "size mismatch: " + std::to_string(data.size()) +
                                 " values for " + std::to_string(height) + "x" +
                                 std::to_string(width));
    for (std::uint8_t v : data)
        if (v > 1) throw Error(kModule, "mask contains values outside {0,1}");
}

Mask rasterize(const PolygonSet& ps, const GeoTransform& t, int height, int width) {
    if (!t.valid()) throw Error(kModule, "invalid transform");
    if (height < 1 || width < 1) throw Error(kModule, "empty raster extent");
    Mask m(height, width, t);

    std::vector<double> xs;
    for (std::size_t pi = 0; pi < ps.polygons.size(); ++pi) {
        const Polygon& poly = ps.polygons[pi];
        const WorldBounds& b = ps.bbox[pi];
        int r_lo = static_cast<int>(std::floor((t.origin_y - b.max_y) / t.pixel_h - 0.5));
        int r_hi = static_cast<int>(std::ceil((t.origin_y - b.min_y) / t.pixel_h - 0.5));
        r_lo = std::max(r_lo, 0);
        r_hi = std::min(r_hi, height - 1);
        for (int r = r_lo; r <= r_hi; ++r) {
            const double y = t.origin_y - (static_cast<double>(r) + 0.5) * t.pixel_h;
            collect_crossings(poly, y, xs);
            for (std::size_t k = 0; k + 1 < xs.size(); k += 2) {
                // Pixel centers in [xs[k], xs[k+1]), left edge inclusive.
                int c0 = static_cast<int>(std::ceil((xs[k] - t.origin_x) / t.pixel_w - 0.5));
                int c1 = static_cast<int>(
                             std::ceil((xs[k + 1] - t.origin_x) / t.pixel_w - 0.5)) -
                         1;
                c0 = std::max(c0, 0);
                c1 = std::min(c1, width - 1);
                if (c0 > c1) continue;
                std::memset(m.data.data() + m.index(r, c0), 1,
                            static_cast<std::size_t>(c1 - c0 + 1));
            }
        }
    }
    return m;
}

bool mask_intersects_window(const Mask& m, const Window& w) {
    if (!w.in_bounds(m.height, m.width))
        throw Error(kModule, "window out of bounds");
    for (int r = 0; r < w.height; ++r) {
        const std::uint8_t* row = m.data.data() + m.index(w.row_off + r, w.col_off);
        if (std::memchr(row, 1, static_cast<std::size_t>(w.width))) return true;
    }
    return false;
}

Mask load_mask(const std::string& path) {
    const std::string base = detail::bundle_base(path);
    const detail::BundleHeader h = detail::read_bundle_header(base);
    if (h.dtype != "u8")
        throw Error(kModule, "unsupported dtype \"" + h.dtype + "\" in " + base +
                                 ".json (expected u8)");
    if (h.bands != 1) throw Error(kModule, "mask bundles are single-band");
    Mask m(h.height, h.width, h.transform);
    m.crs = h.crs;
    const auto payload = detail::read_bundle_payload(base, m.data.size(), kModule);
    std::memcpy(m.data.data(), payload.data(), m.data.size());
    m.validate();
    return m;
}

void save_mask(const Mask& mask, const std::string& path) {
    mask.validate();
    const std::string base = detail::bundle_base(path);
    detail::BundleHeader h;
    h.bands = 1;
    h.height = mask.height;
    h.width = mask.width;
    h.dtype = "u8";
    h.transform = mask.transform;
    h.crs = mask.crs;
    detail::write_bundle_header(base, h);
    detail::write_bundle_payload(base, mask.data.data(), mask.data.size(), kModule);
}

Mask mask_window(const Mask& m, const Window& w) {
    if (!w.in_bounds(m.height, m.width))
        throw Error(kModule, "window out of bounds");
    Mask out(w.height, w.width, shift_transform(m.transform, w.col_off, w.row_off));
    out.crs = m.crs;
    for (int r = 0; r < w.height; ++r) {
        std::memcpy(out.data.data() + out.index(r, 0),
                    m.data.data() + m.index(w.row_off + r, w.col_off),
                    static_cast<std::size_t>(w.width));
    }
    return out;
}

}  // namespace scarseg
