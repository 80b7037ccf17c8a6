#include <doctest.h>

#include <fstream>

#include "scarseg/error.hpp"
#include "scarseg/mask.hpp"
#include "scarseg/polygon.hpp"
#include "test_util.hpp"

using namespace scarseg;
using testutil::TempDir;

namespace {

Ring rect(double x0, double y0, double x1, double y1) {
    return {{x0, y0}, {x1, y0}, {x1, y1}, {x0, y1}, {x0, y0}};
}

PolygonSet one(Polygon p) {
    PolygonSet ps;
    ps.push(std::move(p));
    return ps;
}

}  // namespace

TEST_CASE("polygon_area: square, holed square, degenerate ring") {
    Polygon unit{rect(0, 0, 1, 1), {}};
    CHECK(polygon_area(unit) == doctest::Approx(1.0));

    Polygon holed{rect(0, 0, 2, 2), {rect(0.5, 0.5, 1.5, 1.5)}};
    CHECK(polygon_area(holed) == doctest::Approx(3.0));

    Polygon degenerate{{{0, 0}, {1, 1}, {2, 2}, {0, 0}}, {}};
    CHECK(polygon_area(degenerate) == doctest::Approx(0.0));
}

TEST_CASE("rasterize: 10 m square on a 5 m grid covers exactly 4 pixels") {
    // grid origin (0, 20), 4x4 at 5 m; square x in [0,10], y in [10,20]
    GeoTransform t{0, 20, 5, 5};
    Polygon sq{rect(0, 10, 10, 20), {}};
    const Mask m = rasterize(one(sq), t, 4, 4);
    CHECK(m.count_ones() == 4);
    CHECK(m.at(0, 0) == 1);
    CHECK(m.at(0, 1) == 1);
    CHECK(m.at(1, 0) == 1);
    CHECK(m.at(1, 1) == 1);
}

TEST_CASE("rasterize corner cases") {
    GeoTransform t{0, 20, 5, 5};
    SUBCASE("empty set is all zero") {
        CHECK(rasterize(PolygonSet{}, t, 4, 4).count_ones() == 0);
    }
    SUBCASE("polygon outside the extent contributes nothing") {
        Polygon far{rect(1000, 1000, 1010, 1010), {}};
        CHECK(rasterize(one(far), t, 4, 4).count_ones() == 0);
    }
    SUBCASE("hole subtracts") {
        Polygon holed{rect(0, 0, 20, 20), {rect(5, 5, 15, 15)}};
        const Mask m = rasterize(one(holed), t, 4, 4);
        CHECK(m.count_ones() == 12);  // 16 minus the 4 hole pixels
        CHECK(m.at(1, 1) == 0);
        CHECK(m.at(2, 2) == 0);
        CHECK(m.at(0, 0) == 1);
    }
    SUBCASE("duplicated polygon leaves the mask unchanged") {
        Polygon sq{rect(0, 10, 10, 20), {}};
        PolygonSet once = one(sq);
        PolygonSet twice = one(sq);
        twice.push(sq);
        CHECK(rasterize(once, t, 4, 4).data == rasterize(twice, t, 4, 4).data);
    }
}

TEST_CASE("rasterize: triangle matches the pixel-center oracle") {
    GeoTransform t{0, 16, 1, 1};
    Ring tri = {{0.2, 0.3}, {15.7, 1.1}, {4.0, 14.5}, {0.2, 0.3}};
    const Mask m = rasterize(one(Polygon{tri, {}}), t, 16, 16);

    // independent even-odd ray cast; no pixel center lies on an edge here,
    // so boundary conventions cannot differ
    auto inside = [&](double px, double py) {
        bool in = false;
        for (std::size_t i = 0; i + 1 < tri.size(); ++i) {
            const double x0 = tri[i][0], y0 = tri[i][1];
            const double x1 = tri[i + 1][0], y1 = tri[i + 1][1];
            if ((y0 > py) != (y1 > py)) {
                const double xc = x0 + (py - y0) / (y1 - y0) * (x1 - x0);
                if (px < xc) in = !in;
            }
        }
        return in;
    };
    for (int r = 0; r < 16; ++r)
        for (int c = 0; c < 16; ++c) {
            const WorldPoint w = pixel_to_world(t, c, r);
            CHECK(static_cast<int>(m.at(r, c)) ==
                  static_cast<int>(inside(w.x, w.y)));
        }
}

TEST_CASE("rasterize: whole-pixel translation shifts the mask") {
    GeoTransform t{0, 32, 1, 1};
    Polygon sq{rect(3.2, 20.1, 9.8, 27.7), {}};
    Polygon moved{rect(3.2 + 4, 20.1 - 6, 9.8 + 4, 27.7 - 6), {}};
    const Mask a = rasterize(one(sq), t, 32, 32);
    const Mask b = rasterize(one(moved), t, 32, 32);
    CHECK(a.count_ones() > 0);
    CHECK(a.count_ones() == b.count_ones());
    for (int r = 0; r < 32; ++r)
        for (int c = 0; c < 32; ++c) {
            const int r2 = r + 6, c2 = c + 4;
            if (r2 < 32 && c2 < 32) CHECK(a.at(r, c) == b.at(r2, c2));
        }
}

TEST_CASE("axis-aligned rectangle mask area is exact") {
    GeoTransform t{0, 100, 5, 5};
    // 40 m x 25 m rectangle aligned to the grid: 8 x 5 pixels
    Polygon r{rect(10, 50, 50, 75), {}};
    const Mask m = rasterize(one(r), t, 20, 20);
    CHECK(m.count_ones() * 25.0 == doctest::Approx(polygon_area(r)));
}

TEST_CASE("mask_intersects_window agrees with the exhaustive scan") {
    const Mask m = testutil::make_mask(40, 40, 77, 0.02);
    Rng rng(5);
    for (int trial = 0; trial < 200; ++trial) {
        const int w = 1 + static_cast<int>(rng.bounded(12));
        const int h = 1 + static_cast<int>(rng.bounded(12));
        const Window win{static_cast<int>(rng.bounded(40 - w)),
                         static_cast<int>(rng.bounded(40 - h)), w, h};
        bool brute = false;
        for (int r = win.row_off; r < win.row_off + h; ++r)
            for (int c = win.col_off; c < win.col_off + w; ++c)
                brute = brute || m.at(r, c) == 1;
        CHECK(mask_intersects_window(m, win) == brute);
    }
    CHECK_THROWS_AS(mask_intersects_window(m, {35, 0, 10, 5}), Error);
}

TEST_CASE("mask bundle round-trips as u8") {
    TempDir dir("mask_rt");
    Mask m = testutil::make_mask(6, 7, 3, 0.4, {10, 20, 5, 5});
    m.crs = "EPSG:32723";
    save_mask(m, dir.sub("m"));
    const Mask back = load_mask(dir.sub("m"));
    CHECK(back.data == m.data);
    CHECK(back.height == 6);
    CHECK(back.width == 7);
    CHECK(back.crs == m.crs);

    // loading a float bundle as a mask must fail on dtype
    save_raster(testutil::make_raster(1, 4, 4, 9), dir.sub("f"));
    CHECK_THROWS_AS(load_mask(dir.sub("f")), Error);
}

TEST_CASE("GeoJSON inventory round-trips, MultiPolygon flattens") {
    TempDir dir("geojson");
    const std::string path = dir.sub("inv.geojson");
    std::ofstream(path) << R"({
      "type": "FeatureCollection",
      "features": [
        {"type": "Feature", "properties": {},
         "geometry": {"type": "Polygon",
           "coordinates": [[[0,0],[10,0],[10,10],[0,10],[0,0]]]}},
        {"type": "Feature", "properties": {},
         "geometry": {"type": "MultiPolygon",
           "coordinates": [
             [[[20,20],[30,20],[30,30],[20,30],[20,20]]],
             [[[40,40],[50,40],[50,50],[40,50],[40,40]]],
             [[[60,60],[70,60],[70,70],[60,70],[60,60]]]]}}
      ]})";
    const PolygonSet ps = load_polygons(path);
    CHECK(ps.size() == 4);  // 1 + 3 flattened parts
    CHECK(polygon_area(ps.polygons[0]) == doctest::Approx(100.0));

    save_polygons(ps, dir.sub("out.geojson"));
    const PolygonSet back = load_polygons(dir.sub("out.geojson"));
    REQUIRE(back.size() == 4);
    for (std::size_t i = 0; i < 4; ++i)
        CHECK(polygon_area(back.polygons[i]) ==
              doctest::Approx(polygon_area(ps.polygons[i])));

    std::ofstream(dir.sub("bad.geojson")) << "{not json";
    CHECK_THROWS_AS(load_polygons(dir.sub("bad.geojson")), Error);
}

TEST_CASE("bbox encloses all vertices") {
    PolygonSet ps;
    ps.push(Polygon{rect(3, -2, 9, 14), {}});
    REQUIRE(ps.bbox.size() == 1);
    CHECK(ps.bbox[0].min_x == 3);
    CHECK(ps.bbox[0].min_y == -2);
    CHECK(ps.bbox[0].max_x == 9);
    CHECK(ps.bbox[0].max_y == 14);
}
