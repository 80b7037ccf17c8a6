#pragma once

#include <array>
#include <string>
#include <vector>

namespace scarseg {

using Point2 = std::array<double, 2>;  // world (x, y), meters

// Closed ring: first point equals the last, at least 4 points.
using Ring = std::vector<Point2>;

struct Polygon {
    Ring exterior;
    std::vector<Ring> holes;
};

struct WorldBounds {
    double min_x = 0.0, min_y = 0.0, max_x = 0.0, max_y = 0.0;
};

WorldBounds ring_bounds(const Ring& ring);

struct PolygonSet {
    std::vector<Polygon> polygons;
    std::vector<WorldBounds> bbox;  // per polygon, encloses all vertices
    std::string crs_label;

    void push(Polygon p);
    std::size_t size() const { return polygons.size(); }
};

// GeoJSON FeatureCollection of Polygon/MultiPolygon geometries; coordinates
// are taken as-is in the raster's projected meters. MultiPolygon parts are
// flattened into individual polygons.
PolygonSet load_polygons(const std::string& path);
void save_polygons(const PolygonSet& ps, const std::string& path);

// Shoelace area of the exterior minus the holes, never negative.
double polygon_area(const Polygon& p);

}  // namespace scarseg
