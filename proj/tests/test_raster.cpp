#include <doctest.h>

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <limits>

#include "scarseg/error.hpp"
#include "scarseg/raster.hpp"
#include "test_util.hpp"

using namespace scarseg;
using testutil::TempDir;
using testutil::make_raster;

TEST_CASE("world_to_pixel floors, pixel_to_world returns centers") {
    GeoTransform t{0.0, 0.0, 5.0, 5.0};
    auto p = world_to_pixel(t, 0.0, 0.0);
    CHECK(p.col == 0);
    CHECK(p.row == 0);

    // origin (0,0), pixel 5 m: x=12, y=-7 lands in column 2, row 1
    p = world_to_pixel(t, 12.0, -7.0);
    CHECK(p.col == 2);
    CHECK(p.row == 1);

    for (int col : {0, 3, 17})
        for (int row : {0, 5, 9}) {
            const WorldPoint c = pixel_to_world(t, col, row);
            const PixelIndex back = world_to_pixel(t, c.x, c.y);
            CHECK(back.col == col);
            CHECK(back.row == row);
        }
}

TEST_CASE("bundle round-trip is bit-exact") {
    TempDir dir("raster_rt");
    Raster r = make_raster(5, 2, 2, 42, {100.0, 200.0, 5.0, 5.0});
    r.crs = "EPSG:32723";
    r.nodata = -999.0f;
    save_raster(r, dir.sub("a"));
    const Raster back = load_raster(dir.sub("a"));
    CHECK(back.bands == 5);
    CHECK(back.height == 2);
    CHECK(back.width == 2);
    CHECK(back.transform.origin_x == 100.0);
    CHECK(back.transform.origin_y == 200.0);
    CHECK(back.crs == "EPSG:32723");
    REQUIRE(back.nodata.has_value());
    CHECK(*back.nodata == -999.0f);
    CHECK(back.data == r.data);

    // path may name the base, the .json, or the .bin
    CHECK(load_raster(dir.sub("a.json")).data == r.data);
    CHECK(load_raster(dir.sub("a.bin")).data == r.data);
}

TEST_CASE("truncated payload is a size mismatch error") {
    TempDir dir("raster_trunc");
    save_raster(make_raster(5, 2, 2, 1), dir.sub("a"));
    // 19 floats instead of 20
    std::filesystem::resize_file(dir.sub("a.bin"), 19 * sizeof(float));
    CHECK_THROWS_WITH_AS(load_raster(dir.sub("a")),
                         doctest::Contains("size mismatch"), Error);
}

TEST_CASE("missing and unwritable paths error") {
    TempDir dir("raster_io");
    CHECK_THROWS_AS(load_raster(dir.sub("nope")), Error);
    std::ofstream(dir.sub("plainfile")) << "x";
    CHECK_THROWS_AS(
        save_raster(make_raster(1, 2, 2, 1), dir.sub("plainfile/sub")), Error);
}

TEST_CASE("validate rejects broken rasters") {
    Raster r = make_raster(2, 3, 3, 7);
    r.data.pop_back();
    CHECK_THROWS_WITH_AS(r.validate(), doctest::Contains("size mismatch"),
                         Error);
    Raster nf = make_raster(1, 2, 2, 7);
    nf.data[1] = std::numeric_limits<float>::quiet_NaN();
    CHECK_THROWS_AS(nf.validate(), Error);
}

TEST_CASE("resample dimension formula: 12.5 m to 5 m") {
    const Raster src = make_raster(2, 4, 7, 3, {0, 0, 12.5, 12.5});
    const Raster out = resample_bilinear(src, 5.0);
    // ceil(dim * 12.5 / 5)
    CHECK(out.height == 10);
    CHECK(out.width == 18);
    CHECK(out.bands == 2);
    CHECK(out.transform.pixel_w == 5.0);
    CHECK(out.transform.origin_x == src.transform.origin_x);
}

TEST_CASE("resample at the source pixel size is the identity") {
    const Raster src = make_raster(3, 6, 5, 11, {40, 70, 2.5, 2.5});
    const Raster out = resample_bilinear(src, 2.5);
    REQUIRE(out.height == src.height);
    REQUIRE(out.width == src.width);
    for (std::size_t i = 0; i < src.data.size(); ++i)
        CHECK(out.data[i] == doctest::Approx(src.data[i]).epsilon(1e-6));
}

TEST_CASE("hand bilinear: center of a 2x2 block is the mean") {
    Raster src(1, 2, 2, {0, 0, 2.0, 2.0});
    src.at(0, 0, 0) = 0.0f;
    src.at(0, 0, 1) = 1.0f;
    src.at(0, 1, 0) = 2.0f;
    src.at(0, 1, 1) = 3.0f;
    // target 4/3 m: output 3x3, center pixel lands exactly mid-block
    const Raster out = resample_bilinear(src, 4.0 / 3.0);
    REQUIRE(out.height == 3);
    REQUIRE(out.width == 3);
    CHECK(out.at(0, 1, 1) == doctest::Approx(1.5));
    // corner center maps to source (-1/6, -1/6): clamps to src(0,0)
    CHECK(out.at(0, 0, 0) == doctest::Approx(0.0));
    // (0,1) center maps to source (0.5, -1/6): row clamps, cols blend evenly
    CHECK(out.at(0, 0, 1) == doctest::Approx(0.5));
}

TEST_CASE("bilinear output bounded by stencil extremes") {
    const Raster src = make_raster(1, 9, 9, 19, {0, 0, 10, 10});
    const Raster out = resample_bilinear(src, 3.7);
    float lo = *std::min_element(src.data.begin(), src.data.end());
    float hi = *std::max_element(src.data.begin(), src.data.end());
    for (float v : out.data) {
        CHECK(v >= lo - 1e-6f);
        CHECK(v <= hi + 1e-6f);
    }
}

TEST_CASE("nodata inside the stencil propagates") {
    Raster src = make_raster(1, 4, 4, 23, {0, 0, 10, 10});
    src.nodata = -7.0f;
    src.at(0, 1, 1) = -7.0f;
    const Raster out = resample_bilinear(src, 5.0);
    REQUIRE(out.nodata.has_value());
    // the fine pixel sitting inside source cell (1,1) must be nodata
    bool found = false;
    for (float v : out.data) found = found || v == -7.0f;
    CHECK(found);
}

TEST_CASE("stack_bands appends DEM after optical") {
    const Raster opt = make_raster(5, 4, 3, 5);
    const Raster dem = make_raster(1, 4, 3, 6);
    const Raster s = stack_bands(opt, dem);
    CHECK(s.bands == 6);
    for (int b = 0; b < 5; ++b)
        for (int r = 0; r < 4; ++r)
            for (int c = 0; c < 3; ++c) CHECK(s.at(b, r, c) == opt.at(b, r, c));
    for (int r = 0; r < 4; ++r)
        for (int c = 0; c < 3; ++c) CHECK(s.at(5, r, c) == dem.at(0, r, c));

    // self-stack: band 6 of stack(x, first band of x) equals band 1 of x
    Raster first(1, 4, 3, opt.transform);
    std::copy(opt.band_ptr(0), opt.band_ptr(0) + 12, first.band_ptr(0));
    const Raster self = stack_bands(opt, first);
    for (int r = 0; r < 4; ++r)
        for (int c = 0; c < 3; ++c) CHECK(self.at(5, r, c) == opt.at(0, r, c));
}

TEST_CASE("stack_bands rejects grid mismatches") {
    const Raster opt = make_raster(5, 4, 3, 5);
    CHECK_THROWS_WITH_AS(stack_bands(opt, make_raster(1, 4, 4, 6)),
                         doctest::Contains("grid mismatch"), Error);
    Raster shifted = make_raster(1, 4, 3, 6);
    shifted.transform.origin_x += 1.0;
    CHECK_THROWS_WITH_AS(stack_bands(opt, shifted),
                         doctest::Contains("grid mismatch"), Error);
}

TEST_CASE("window_read copies pixels and shifts the transform") {
    const Raster r = make_raster(2, 8, 9, 31, {100, 900, 5, 5});
    SUBCASE("full window is the identity") {
        const Raster full = window_read(r, {0, 0, 9, 8});
        CHECK(full.data == r.data);
        CHECK(full.transform.origin_x == r.transform.origin_x);
    }
    SUBCASE("1x1 window matches direct indexing") {
        for (int row : {0, 3, 7})
            for (int col : {0, 4, 8}) {
                const Raster px = window_read(r, {col, row, 1, 1});
                for (int b = 0; b < 2; ++b)
                    CHECK(px.at(b, 0, 0) == r.at(b, row, col));
            }
    }
    SUBCASE("transform shifts by the offset") {
        const Raster w = window_read(r, {3, 2, 4, 4});
        CHECK(w.transform.origin_x == doctest::Approx(100 + 3 * 5.0));
        CHECK(w.transform.origin_y == doctest::Approx(900 - 2 * 5.0));
    }
    SUBCASE("out of bounds throws") {
        CHECK_THROWS_AS(window_read(r, {6, 0, 4, 4}), Error);
    }
}

TEST_CASE("channel normalization maps ranges onto [0,1]") {
    Raster r(2, 2, 2);
    float v0[] = {10, 20, 30, 40};
    float v1[] = {5, 5, 5, 5};  // constant channel
    std::copy(v0, v0 + 4, r.band_ptr(0));
    std::copy(v1, v1 + 4, r.band_ptr(1));
    const auto ranges = channel_ranges(r);
    REQUIRE(ranges.size() == 2);
    CHECK(ranges[0].min == 10);
    CHECK(ranges[0].max == 40);
    const Raster n = normalize_channels(r, ranges);
    CHECK(n.at(0, 0, 0) == doctest::Approx(0.0));
    CHECK(n.at(0, 1, 1) == doctest::Approx(1.0));
    CHECK(n.at(0, 0, 1) == doctest::Approx(1.0 / 3.0));
    for (int i = 0; i < 4; ++i) CHECK(n.band_ptr(1)[i] == 0.0f);

    CHECK_THROWS_AS(normalize_channels(r, {ranges[0]}), Error);
}
