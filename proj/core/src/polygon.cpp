#include "scarseg/polygon.hpp"

#include <cmath>
#include <fstream>

#include <json.hpp>

#include "scarseg/error.hpp"

namespace scarseg {

namespace {

constexpr const char* kModule = "vector_mask";

using nlohmann::json;

double ring_signed_area(const Ring& ring) {
    double twice = 0.0;
    for (std::size_t i = 0; i + 1 < ring.size(); ++i) {
        twice += ring[i][0] * ring[i + 1][1] - ring[i + 1][0] * ring[i][1];
    }
    return 0.5 * twice;
}

Ring parse_ring(const json& coords) {
    if (!coords.is_array() || coords.size() < 4)
        throw Error(kModule, "ring must have at least 4 coordinate pairs");
    Ring ring;
    ring.reserve(coords.size());
    for (const auto& pt : coords) {
        if (!pt.is_array() || pt.size() < 2)
            throw Error(kModule, "coordinate is not an [x, y] pair");
        ring.push_back({pt[0].get<double>(), pt[1].get<double>()});
    }
    if (ring.front() != ring.back())
        throw Error(kModule, "unclosed ring (first point != last point)");
    return ring;
}

Polygon parse_polygon_coords(const json& coords) {
    if (!coords.is_array() || coords.empty())
        throw Error(kModule, "polygon has no rings");
    Polygon p;
    p.exterior = parse_ring(coords[0]);
    for (std::size_t i = 1; i < coords.size(); ++i)
        p.holes.push_back(parse_ring(coords[i]));
    return p;
}

json ring_to_json(const Ring& ring) {
    json arr = json::array();
    for (const auto& pt : ring) arr.push_back({pt[0], pt[1]});
    return arr;
}

}  // namespace

WorldBounds ring_bounds(const Ring& ring) {
    WorldBounds b{ring[0][0], ring[0][1], ring[0][0], ring[0][1]};
    for (const auto& pt : ring) {
        b.min_x = std::min(b.min_x, pt[0]);
        b.min_y = std::min(b.min_y, pt[1]);
        b.max_x = std::max(b.max_x, pt[0]);
        b.max_y = std::max(b.max_y, pt[1]);
    }
    return b;
}

void PolygonSet::push(Polygon p) {
    bbox.push_back(ring_bounds(p.exterior));
    polygons.push_back(std::move(p));
}

PolygonSet load_polygons(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(kModule, "cannot open " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw Error(kModule, "malformed JSON in " + path + ": " + e.what());
    }
    if (!j.is_object() || j.value("type", "") != "FeatureCollection")
        throw Error(kModule, path + " is not a GeoJSON FeatureCollection");

    PolygonSet ps;
    if (j.contains("crs_label") && j["crs_label"].is_string())
        ps.crs_label = j["crs_label"].get<std::string>();

    for (const auto& feature : j.value("features", json::array())) {
        const auto& geom = feature.at("geometry");
        if (geom.is_null()) continue;
        const std::string type = geom.value("type", "");
        if (type == "Polygon") {
            ps.push(parse_polygon_coords(geom.at("coordinates")));
        } else if (type == "MultiPolygon") {
            for (const auto& part : geom.at("coordinates"))
                ps.push(parse_polygon_coords(part));
        } else {
            throw Error(kModule, "non-polygon geometry \"" + type + "\" in " + path);
        }
    }
    return ps;
}

void save_polygons(const PolygonSet& ps, const std::string& path) {
    json features = json::array();
    for (std::size_t i = 0; i < ps.polygons.size(); ++i) {
        const Polygon& p = ps.polygons[i];
        json rings = json::array();
        rings.push_back(ring_to_json(p.exterior));
        for (const auto& hole : p.holes) rings.push_back(ring_to_json(hole));
        features.push_back(
            {{"type", "Feature"},
             {"properties", {{"id", i}, {"area_m2", polygon_area(p)}}},
             {"geometry", {{"type", "Polygon"}, {"coordinates", rings}}}});
    }
    json j{{"type", "FeatureCollection"}, {"features", features}};
    if (!ps.crs_label.empty()) j["crs_label"] = ps.crs_label;
    std::ofstream out(path);
    if (!out) throw Error(kModule, "cannot write " + path);
    out << j.dump(2) << '\n';
    if (!out) throw Error(kModule, "write failed for " + path);
}

double polygon_area(const Polygon& p) {
    double area = std::fabs(ring_signed_area(p.exterior));
    for (const auto& hole : p.holes) area -= std::fabs(ring_signed_area(hole));
    return std::max(area, 0.0);
}

}  // namespace scarseg
