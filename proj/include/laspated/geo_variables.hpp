#pragma once

// Area algebra between two partitions of the same border.

#include "error.hpp"
#include "geojson.hpp"
#include "geometry.hpp"
#include "ndarray.hpp"
#include "spatial_discretization.hpp"

#include <cstddef>
#include <map>
#include <string>
#include <vector>

namespace laspated {

// A(i,j) = area of d1[i] intersected with d2[j], km^2.
[[nodiscard]] inline Array intersection_matrix(const RegionSet& d1, const RegionSet& d2) {
    Array a({d1.size(), d2.size()}, 0.0);
    for (std::size_t i = 0; i < d1.size(); ++i)
        for (std::size_t j : d2.candidates(d1[i].bbox)) {
            const auto part = geo::intersect(d1[i].geometry, d2[j].geometry);
            if (!part.empty()) a(i, j) = geo::area_km2(part, d1.ctx());
        }
    return a;
}

// value_i = sum_j P_j A(i,j) / area_j. `areas` are the d2 areas that define the
// densities; by default the (clipped) region areas.
[[nodiscard]] inline std::vector<double> disaggregate(const Array& A, const std::vector<double>& P,
                                                      const std::vector<double>& areas) {
    const std::size_t I = A.dim(0), J = A.dim(1);
    if (P.size() != J || areas.size() != J) throw DataError("one total and one area per source region are required");
    std::vector<double> density(J, 0.0);
    for (std::size_t j = 0; j < J; ++j) {
        if (P[j] < 0.0) throw DataError("feature totals must be non-negative");
        if (P[j] == 0.0) continue;
        if (!(areas[j] > 0.0)) throw DataError("source region " + std::to_string(j) + " has zero area and a positive total");
        density[j] = P[j] / areas[j];
    }
    std::vector<double> v(I, 0.0);
    for (std::size_t i = 0; i < I; ++i)
        for (std::size_t j = 0; j < J; ++j) v[i] += density[j] * A(i, j);
    return v;
}

inline std::vector<double> disaggregate_feature(RegionSet& d1, const RegionSet& d2, const std::vector<double>& P,
                                                const std::string& name, std::vector<double> areas = {}) {
    if (areas.empty())
        for (const auto& r : d2.regions()) areas.push_back(r.area_km2);
    auto v = disaggregate(intersection_matrix(d1, d2), P, areas);
    d1.set_attribute(name, v);
    return v;
}

// Per-class intersected area for every d1 region; also stored as attributes
// "<prefix><class>".
inline std::map<std::string, std::vector<double>> area_by_class(RegionSet& d1, const RegionSet& d2,
                                                                const std::vector<std::string>& class_of,
                                                                const std::string& prefix = "area_") {
    if (class_of.size() != d2.size()) throw DataError("every source region needs a class label");
    const Array A = intersection_matrix(d1, d2);
    std::map<std::string, std::vector<double>> out;
    for (const auto& c : class_of) out.try_emplace(c, std::vector<double>(d1.size(), 0.0));
    for (std::size_t i = 0; i < d1.size(); ++i)
        for (std::size_t j = 0; j < d2.size(); ++j) out[class_of[j]][i] += A(i, j);
    for (const auto& [c, v] : out) d1.set_attribute(prefix + c, v);
    return out;
}

// Source partition from GeoJSON features, clipped to the border. grid_index
// keeps the feature position; unclipped areas are returned alongside.
struct SourceLayer {
    RegionSet regions;
    std::vector<std::size_t> feature_of;  // per region
    std::vector<double> unclipped_area_km2;
};

[[nodiscard]] inline SourceLayer source_layer(const Border& border, const std::vector<geojson::Feature>& features) {
    std::vector<geo::MultiPolygon> cells;
    for (const auto& f : features) cells.push_back(f.shape);
    SourceLayer s{detail::clip_cells(border, cells), {}, {}};
    for (const auto& r : s.regions.regions()) {
        const auto k = static_cast<std::size_t>(r.attributes.at("grid_index"));
        s.feature_of.push_back(k);
        s.unclipped_area_km2.push_back(geo::area_km2(features[k].shape, border.ctx));
    }
    return s;
}

[[nodiscard]] inline double numeric_property(const geojson::Feature& f, const std::string& prop) {
    const auto it = f.properties.find(prop);
    if (it == f.properties.end() || !it->is_number()) throw DataError("feature lacks numeric property '" + prop + "'");
    return it->get<double>();
}

[[nodiscard]] inline std::string label_property(const geojson::Feature& f, const std::string& prop) {
    const auto it = f.properties.find(prop);
    if (it == f.properties.end() || it->is_null()) throw DataError("feature lacks property '" + prop + "'");
    return it->is_string() ? it->get<std::string>() : it->dump();
}

} // namespace laspated
