#include "scarseg/synth.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "scarseg/error.hpp"
#include "scarseg/log.hpp"
#include "scarseg/rng.hpp"

namespace scarseg {

void SynthSpec::validate() const {
    if (height < 32 || width < 32)
        throw Error("synth", "scene must be at least 32x32");
    if (!(pixel > 0) || !(dem_pixel > 0))
        throw Error("synth", "pixel sizes must be positive");
    const double hr = height * pixel / dem_pixel;
    const double wr = width * pixel / dem_pixel;
    if (std::abs(hr - std::round(hr)) > 1e-9 ||
        std::abs(wr - std::round(wr)) > 1e-9)
        throw Error("synth",
                    "DEM pixel does not evenly divide the scene extent");
    if (n_scars < 1) throw Error("synth", "need at least one scar");
    if (n_decoys < 0) throw Error("synth", "n_decoys must be >= 0");
    if (noise < 0) throw Error("synth", "noise must be >= 0");
}

namespace {

struct Hill {
    double cx, cy, sigma, amp;
};

struct Terrain {
    std::vector<Hill> hills;
    double ramp_x = 0, ramp_y = 0;

    double elev(double x, double y) const {
        double e = ramp_x * x + ramp_y * y;
        for (const auto& h : hills) {
            const double dx = x - h.cx, dy = y - h.cy;
            e += h.amp * std::exp(-(dx * dx + dy * dy) / (2 * h.sigma * h.sigma));
        }
        return e;
    }
};

double hash_unit(std::uint64_t seed, std::int64_t a, std::int64_t b) {
    const std::uint64_t h = mix_seed(
        mix_seed(seed, static_cast<std::uint64_t>(a) * 0x9e3779b97f4a7c15ull),
        static_cast<std::uint64_t>(b) * 0xc2b2ae3d27d4eb4full);
    return static_cast<double>(h >> 11) * 0x1.0p-53;
}

double smoothstep(double t) { return t * t * (3.0 - 2.0 * t); }

// Lattice value noise in [0,1); coordinates in lattice units.
double vnoise(std::uint64_t seed, double x, double y) {
    const double fx = std::floor(x), fy = std::floor(y);
    const auto ix = static_cast<std::int64_t>(fx);
    const auto iy = static_cast<std::int64_t>(fy);
    const double tx = smoothstep(x - fx), ty = smoothstep(y - fy);
    const double v00 = hash_unit(seed, ix, iy);
    const double v10 = hash_unit(seed, ix + 1, iy);
    const double v01 = hash_unit(seed, ix, iy + 1);
    const double v11 = hash_unit(seed, ix + 1, iy + 1);
    const double a = v00 + (v10 - v00) * tx;
    const double b = v01 + (v11 - v01) * tx;
    return a + (b - a) * ty;
}

// Two-octave texture centered on 1.0 with +-amp swing.
double texture(std::uint64_t seed, double x, double y, double corr,
               double amp) {
    const double n1 = vnoise(seed, x / corr, y / corr);
    const double n2 = vnoise(mix_seed(seed, 0x0c7aul), 2 * x / corr,
                             2 * y / corr);
    return 1.0 + amp * (0.7 * (n1 - 0.5) + 0.3 * (n2 - 0.5)) * 2.0;
}

Polygon make_ellipse(double cx, double cy, double a, double b, double theta) {
    constexpr int kVerts = 20;
    Polygon poly;
    poly.exterior.reserve(kVerts + 1);
    const double ct = std::cos(theta), st = std::sin(theta);
    for (int i = 0; i < kVerts; ++i) {
        const double phi = 2.0 * M_PI * i / kVerts;
        const double ex = a * std::cos(phi), ey = b * std::sin(phi);
        poly.exterior.push_back({cx + ex * ct - ey * st,
                                 cy + ex * st + ey * ct});
    }
    poly.exterior.push_back(poly.exterior.front());
    return poly;
}

struct Blob {
    double cx, cy, a, b, theta;
};

std::vector<Blob> place_blobs(const Terrain& terr, Rng& rng, int count,
                              double wx, double wy, bool high_ground,
                              double q_lo, double q_hi, const char* kind) {
    std::vector<Blob> blobs;
    int attempts = 0;
    const int max_attempts = count * 600;
    while (static_cast<int>(blobs.size()) < count) {
        if (++attempts > max_attempts)
            throw Error("synth", std::string("could not place ") + kind +
                                     " blobs on suitable terrain");
        Blob bl;
        bl.a = rng.uniform(30.0, 80.0);
        bl.b = bl.a * rng.uniform(0.5, 0.9);
        bl.theta = rng.uniform(0.0, M_PI);
        bl.cx = rng.uniform(bl.a, wx - bl.a);
        bl.cy = rng.uniform(bl.a, wy - bl.a);
        const double e = terr.elev(bl.cx, bl.cy);
        if (high_ground ? e < q_hi : e > q_lo) continue;
        // avoid heavy stacking so the count stays meaningful
        bool clash = false;
        for (const auto& other : blobs) {
            const double dx = bl.cx - other.cx, dy = bl.cy - other.cy;
            const double lim = 0.7 * (bl.a + other.a);
            if (dx * dx + dy * dy < lim * lim) {
                clash = true;
                break;
            }
        }
        if (!clash) blobs.push_back(bl);
    }
    return blobs;
}

}  // namespace

SynthScene synth_scene(const SynthSpec& spec) {
    spec.validate();
    Rng rng(mix_seed(spec.seed, 0x5ce11eull));
    const double wx = spec.width * spec.pixel;
    const double wy = spec.height * spec.pixel;

    Terrain terr;
    terr.ramp_x = rng.uniform(-0.02, 0.02);
    terr.ramp_y = rng.uniform(-0.02, 0.02);
    const int n_hills = 6;
    for (int i = 0; i < n_hills; ++i) {
        Hill h;
        h.cx = rng.uniform(0.1 * wx, 0.9 * wx);
        h.cy = rng.uniform(0.1 * wy, 0.9 * wy);
        h.sigma = rng.uniform(0.12, 0.30) * std::min(wx, wy);
        h.amp = rng.uniform(200.0, 600.0);
        terr.hills.push_back(h);
    }

    const GeoTransform gt{0.0, wy, spec.pixel, spec.pixel};

    // elevation quantiles over the optical grid decide what counts as
    // "high" (scar terrain) vs "low" (decoy terrain)
    std::vector<double> elev_samples;
    elev_samples.reserve(static_cast<std::size_t>(spec.height) * spec.width / 16);
    for (int r = 0; r < spec.height; r += 4)
        for (int c = 0; c < spec.width; c += 4) {
            const auto [x, y] = pixel_to_world(gt, c, r);
            elev_samples.push_back(terr.elev(x, y));
        }
    std::vector<double> sorted = elev_samples;
    std::sort(sorted.begin(), sorted.end());
    const double q_lo = sorted[static_cast<std::size_t>(0.40 * (sorted.size() - 1))];
    const double q_hi = sorted[static_cast<std::size_t>(0.65 * (sorted.size() - 1))];

    const std::vector<Blob> scars =
        place_blobs(terr, rng, spec.n_scars, wx, wy, true, q_lo, q_hi, "scar");
    const std::vector<Blob> decoys = place_blobs(
        terr, rng, spec.n_decoys, wx, wy, false, q_lo, q_hi, "decoy");

    SynthScene scene;
    scene.inventory.crs_label = spec.crs;
    for (const auto& bl : scars)
        scene.inventory.push(make_ellipse(bl.cx, bl.cy, bl.a, bl.b, bl.theta));

    scene.truth = rasterize(scene.inventory, gt, spec.height, spec.width);
    scene.truth.crs = spec.crs;

    PolygonSet decoy_set;
    for (const auto& bl : decoys)
        decoy_set.push(make_ellipse(bl.cx, bl.cy, bl.a, bl.b, bl.theta));
    Mask decoy_mask;
    if (spec.n_decoys > 0)
        decoy_mask = rasterize(decoy_set, gt, spec.height, spec.width);

    // RapidEye-like ordering: blue, green, red, red edge, NIR
    const double veg[5] = {400, 620, 480, 1900, 2600};
    const double scar_dn[5] = {850, 1000, 1250, 1500, 1700};
    double decoy_dn[5];
    for (int b = 0; b < 5; ++b)
        decoy_dn[b] = 0.85 * scar_dn[b] + 0.15 * veg[b];

    Raster& opt = scene.optical;
    opt.bands = 5;
    opt.height = spec.height;
    opt.width = spec.width;
    opt.transform = gt;
    opt.crs = spec.crs;
    opt.data.resize(static_cast<std::size_t>(5) * spec.height * spec.width);

    const double corr = 18.0 * spec.pixel;  // texture correlation length (m)
    for (int b = 0; b < 5; ++b) {
        const std::uint64_t tex_seed = mix_seed(spec.seed, 0xb0 + b);
        const std::uint64_t noise_seed = mix_seed(spec.seed, 0x70a0 + b);
        float* plane = opt.band_ptr(b);
        for (int r = 0; r < spec.height; ++r)
            for (int c = 0; c < spec.width; ++c) {
                const std::size_t idx =
                    static_cast<std::size_t>(r) * spec.width + c;
                const auto [x, y] = pixel_to_world(gt, c, r);
                double dn;
                if (scene.truth.data[idx])
                    dn = scar_dn[b] * texture(tex_seed ^ 1, x, y, corr, 0.20);
                else if (spec.n_decoys > 0 && decoy_mask.data[idx])
                    dn = decoy_dn[b] * texture(tex_seed ^ 1, x, y, corr, 0.20);
                else
                    dn = veg[b] * texture(tex_seed, x, y, corr, 0.15);
                const double white =
                    (hash_unit(noise_seed, idx, 17) - 0.5) * 2.0 *
                    std::sqrt(3.0) * spec.noise * dn;
                plane[idx] = static_cast<float>(dn + white);
            }
    }

    const int dh = static_cast<int>(std::llround(spec.height * spec.pixel /
                                                 spec.dem_pixel));
    const int dw = static_cast<int>(std::llround(spec.width * spec.pixel /
                                                 spec.dem_pixel));
    Raster& dem = scene.dem;
    dem.bands = 1;
    dem.height = dh;
    dem.width = dw;
    dem.transform = GeoTransform{0.0, wy, spec.dem_pixel, spec.dem_pixel};
    dem.crs = spec.crs;
    dem.data.resize(static_cast<std::size_t>(dh) * dw);
    const std::uint64_t dem_noise = mix_seed(spec.seed, 0xde71);
    for (int r = 0; r < dh; ++r)
        for (int c = 0; c < dw; ++c) {
            const auto [x, y] = pixel_to_world(dem.transform, c, r);
            const double jitter =
                (hash_unit(dem_noise, r, c) - 0.5) * 4.0;  // +-2 m
            dem.data[static_cast<std::size_t>(r) * dw + c] =
                static_cast<float>(terr.elev(x, y) + jitter);
        }

    log_info("synth scene " + std::to_string(spec.width) + "x" +
             std::to_string(spec.height) + ": " +
             std::to_string(scars.size()) + " scars, " +
             std::to_string(decoys.size()) + " decoys, " +
             std::to_string(scene.truth.count_ones()) + " positive pixels");
    return scene;
}

}  // namespace scarseg
