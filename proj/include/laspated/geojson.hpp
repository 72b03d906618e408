#pragma once

// GeoJSON (RFC 7946) reading and writing for the geometry types. Coordinates
// are [lon, lat].

#include "error.hpp"
#include "geometry.hpp"

#include <json.hpp>

#include <fstream>
#include <optional>
#include <string>
#include <vector>

namespace laspated::geojson {

using json = nlohmann::json;

struct Feature {
    // Polygonal features fill `shape`; Point features fill `point`.
    geo::MultiPolygon shape;
    std::optional<geo::GeoPoint> point;
    json properties = json::object();
};

namespace detail {

inline geo::GeoPoint read_position(const json& j) {
    if (!j.is_array() || j.size() < 2 || !j[0].is_number() || !j[1].is_number())
        throw DataError("GeoJSON: position must be [lon, lat]");
    geo::GeoPoint p{j[0].get<double>(), j[1].get<double>()};
    geo::validate_point(p);
    return p;
}

inline geo::Ring read_ring(const json& j) {
    if (!j.is_array()) throw DataError("GeoJSON: ring must be an array of positions");
    geo::Ring ring;
    ring.reserve(j.size());
    for (const auto& pos : j) ring.push_back(read_position(pos));
    return ring;
}

inline geo::Polygon read_polygon(const json& j) {
    if (!j.is_array() || j.empty()) throw DataError("GeoJSON: polygon needs at least an outer ring");
    geo::Polygon p;
    p.outer = read_ring(j[0]);
    for (std::size_t i = 1; i < j.size(); ++i) p.holes.push_back(read_ring(j[i]));
    return geo::normalize(std::move(p));
}

inline json write_ring(const geo::Ring& ring) {
    json out = json::array();
    for (const auto& p : ring) out.push_back({p.lon, p.lat});
    if (!ring.empty()) out.push_back({ring.front().lon, ring.front().lat});
    return out;
}

} // namespace detail

// Reads one geometry object into `f`. GeometryCollection members are merged.
inline void read_geometry(const json& g, Feature& f) {
    if (g.is_null()) return;
    const std::string type = g.value("type", "");
    if (type == "Polygon") {
        f.shape.parts.push_back(detail::read_polygon(g.at("coordinates")));
    } else if (type == "MultiPolygon") {
        for (const auto& poly : g.at("coordinates")) f.shape.parts.push_back(detail::read_polygon(poly));
    } else if (type == "Point") {
        f.point = detail::read_position(g.at("coordinates"));
    } else if (type == "GeometryCollection") {
        for (const auto& member : g.at("geometries")) read_geometry(member, f);
    } else {
        throw DataError("GeoJSON: unsupported geometry type '" + type + "'");
    }
}

inline std::vector<Feature> parse_features(const json& doc) {
    std::vector<Feature> out;
    const std::string type = doc.value("type", "");
    if (type == "FeatureCollection") {
        for (const auto& feat : doc.at("features")) {
            Feature f;
            read_geometry(feat.at("geometry"), f);
            if (feat.contains("properties") && feat["properties"].is_object()) f.properties = feat["properties"];
            out.push_back(std::move(f));
        }
    } else if (type == "Feature") {
        Feature f;
        read_geometry(doc.at("geometry"), f);
        if (doc.contains("properties") && doc["properties"].is_object()) f.properties = doc["properties"];
        out.push_back(std::move(f));
    } else {
        Feature f;
        read_geometry(doc, f);
        out.push_back(std::move(f));
    }
    return out;
}

inline std::vector<Feature> read_features(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open GeoJSON file: " + path);
    json doc;
    try {
        in >> doc;
    } catch (const json::parse_error& e) {
        throw DataError(path + ": " + e.what());
    }
    try {
        return parse_features(doc);
    } catch (const json::exception& e) {
        throw DataError(path + ": " + e.what());
    }
}

inline json to_json(const geo::MultiPolygon& mp) {
    json coords = json::array();
    for (const auto& part : mp.parts) {
        json poly = json::array();
        poly.push_back(detail::write_ring(part.outer));
        for (const auto& h : part.holes) poly.push_back(detail::write_ring(h));
        coords.push_back(std::move(poly));
    }
    return {{"type", "MultiPolygon"}, {"coordinates", std::move(coords)}};
}

inline json feature_collection(const std::vector<Feature>& features) {
    json arr = json::array();
    for (const auto& f : features) {
        json geom = f.point ? json{{"type", "Point"}, {"coordinates", {f.point->lon, f.point->lat}}} : to_json(f.shape);
        arr.push_back({{"type", "Feature"}, {"properties", f.properties}, {"geometry", std::move(geom)}});
    }
    return {{"type", "FeatureCollection"}, {"features", std::move(arr)}};
}

} // namespace laspated::geojson
