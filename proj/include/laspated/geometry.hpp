#pragma once

// Planar geometry on longitude/latitude data. Coordinates are stored in
// degrees; metric quantities go through a local equirectangular projection
// (an affine map), so overlay results computed in degrees are the same point
// sets as in the projected plane.

#include "error.hpp"

// Boost's default integer rescaling moves overlay vertices by ~1e-8 degrees,
// enough to break exact border and shared-edge tests.
#ifndef BOOST_GEOMETRY_NO_ROBUSTNESS
#define BOOST_GEOMETRY_NO_ROBUSTNESS
#endif
#include <boost/geometry.hpp>
#include <boost/geometry/geometries/multi_polygon.hpp>
#include <boost/geometry/geometries/point_xy.hpp>
#include <boost/geometry/geometries/polygon.hpp>

#include <algorithm>
#include <cmath>
#include <compare>
#include <limits>
#include <numbers>
#include <span>
#include <string>
#include <vector>

namespace laspated::geo {

inline constexpr double earth_radius_km = 6371.0;
inline constexpr double km_per_degree = earth_radius_km * std::numbers::pi / 180.0;
inline constexpr double coord_tolerance_deg = 1e-9;
inline constexpr double empty_area_km2 = 1e-12;

struct GeoPoint {
    double lon = 0.0;
    double lat = 0.0;
    friend auto operator<=>(const GeoPoint&, const GeoPoint&) = default;
};

struct PlanarPoint {
    double x = 0.0;  // km
    double y = 0.0;  // km
};

using Ring = std::vector<GeoPoint>;

// Rings are stored unclosed. After normalize(): outer counter-clockwise,
// holes clockwise, no repeated consecutive vertices.
struct Polygon {
    Ring outer;
    std::vector<Ring> holes;
};

struct MultiPolygon {
    std::vector<Polygon> parts;
    [[nodiscard]] bool empty() const noexcept { return parts.empty(); }
};

struct BoundingBox {
    double min_lon = std::numeric_limits<double>::infinity();
    double min_lat = std::numeric_limits<double>::infinity();
    double max_lon = -std::numeric_limits<double>::infinity();
    double max_lat = -std::numeric_limits<double>::infinity();

    [[nodiscard]] bool valid() const noexcept { return min_lon <= max_lon && min_lat <= max_lat; }
    void extend(const GeoPoint& p) noexcept {
        min_lon = std::min(min_lon, p.lon);
        min_lat = std::min(min_lat, p.lat);
        max_lon = std::max(max_lon, p.lon);
        max_lat = std::max(max_lat, p.lat);
    }
    [[nodiscard]] bool intersects(const BoundingBox& o, double tol = 0.0) const noexcept {
        return min_lon <= o.max_lon + tol && o.min_lon <= max_lon + tol &&
               min_lat <= o.max_lat + tol && o.min_lat <= max_lat + tol;
    }
    [[nodiscard]] GeoPoint center() const noexcept {
        return {0.5 * (min_lon + max_lon), 0.5 * (min_lat + max_lat)};
    }
};

struct ProjectionContext {
    double lon0 = 0.0;
    double lat0 = 0.0;
    double k = km_per_degree;

    [[nodiscard]] double x_scale() const noexcept { return k * std::cos(lat0 * std::numbers::pi / 180.0); }
};

[[nodiscard]] inline ProjectionContext context_at(const GeoPoint& center) { return {center.lon, center.lat, km_per_degree}; }

[[nodiscard]] inline PlanarPoint project(const ProjectionContext& ctx, const GeoPoint& p) {
    return {(p.lon - ctx.lon0) * ctx.x_scale(), (p.lat - ctx.lat0) * ctx.k};
}

[[nodiscard]] inline GeoPoint unproject(const ProjectionContext& ctx, const PlanarPoint& p) {
    return {ctx.lon0 + p.x / ctx.x_scale(), ctx.lat0 + p.y / ctx.k};
}

inline void validate_point(const GeoPoint& p) {
    if (!std::isfinite(p.lon) || !std::isfinite(p.lat) || p.lon < -180.0 || p.lon > 180.0 || p.lat < -90.0 ||
        p.lat > 90.0) {
        throw DataError("coordinate out of range: lon=" + std::to_string(p.lon) + " lat=" + std::to_string(p.lat));
    }
}

// Shoelace over a ring in degree units; positive when counter-clockwise.
[[nodiscard]] inline double signed_area_deg2(std::span<const GeoPoint> ring) {
    const std::size_t n = ring.size();
    if (n < 3) return 0.0;
    // shift to the first vertex to limit cancellation
    const double ox = ring[0].lon, oy = ring[0].lat;
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const auto& a = ring[i];
        const auto& b = ring[(i + 1) % n];
        s += (a.lon - ox) * (b.lat - oy) - (b.lon - ox) * (a.lat - oy);
    }
    return 0.5 * s;
}

namespace detail {

inline bool same_point(const GeoPoint& a, const GeoPoint& b) {
    return std::abs(a.lon - b.lon) <= coord_tolerance_deg && std::abs(a.lat - b.lat) <= coord_tolerance_deg;
}

// Drops the closing vertex and consecutive duplicates.
inline Ring clean_ring(Ring ring) {
    Ring out;
    out.reserve(ring.size());
    for (const auto& p : ring) {
        if (out.empty() || !same_point(out.back(), p)) out.push_back(p);
    }
    while (out.size() > 1 && same_point(out.front(), out.back())) out.pop_back();
    return out;
}

inline void orient(Ring& ring, bool ccw) {
    if ((signed_area_deg2(ring) > 0.0) != ccw) std::reverse(ring.begin(), ring.end());
}

} // namespace detail

[[nodiscard]] inline Polygon normalize(Polygon poly) {
    poly.outer = detail::clean_ring(std::move(poly.outer));
    if (poly.outer.size() < 3) throw DataError("degenerate ring: fewer than 3 distinct vertices");
    detail::orient(poly.outer, true);
    std::vector<Ring> holes;
    for (auto& h : poly.holes) {
        Ring r = detail::clean_ring(std::move(h));
        if (r.size() < 3) throw DataError("degenerate hole: fewer than 3 distinct vertices");
        detail::orient(r, false);
        holes.push_back(std::move(r));
    }
    poly.holes = std::move(holes);
    return poly;
}

[[nodiscard]] inline MultiPolygon normalize(MultiPolygon mp) {
    for (auto& p : mp.parts) p = normalize(std::move(p));
    return mp;
}

[[nodiscard]] inline MultiPolygon as_multi(Polygon p) { return MultiPolygon{{normalize(std::move(p))}}; }

[[nodiscard]] inline Polygon rectangle(double min_lon, double min_lat, double max_lon, double max_lat) {
    return Polygon{{{min_lon, min_lat}, {max_lon, min_lat}, {max_lon, max_lat}, {min_lon, max_lat}}, {}};
}

[[nodiscard]] inline BoundingBox bounding_box(std::span<const GeoPoint> pts) {
    BoundingBox b;
    for (const auto& p : pts) b.extend(p);
    return b;
}

[[nodiscard]] inline BoundingBox bounding_box(const MultiPolygon& mp) {
    BoundingBox b;
    for (const auto& part : mp.parts)
        for (const auto& p : part.outer) b.extend(p);
    return b;
}

[[nodiscard]] inline double ring_area_km2(std::span<const GeoPoint> ring, const ProjectionContext& ctx) {
    if (ring.size() < 3) throw DataError("degenerate ring: fewer than 3 distinct vertices");
    return std::abs(signed_area_deg2(ring)) * ctx.k * ctx.x_scale();
}

[[nodiscard]] inline double area_km2(const Polygon& poly, const ProjectionContext& ctx) {
    double a = ring_area_km2(poly.outer, ctx);
    for (const auto& h : poly.holes) a -= ring_area_km2(h, ctx);
    return std::max(a, 0.0);
}

[[nodiscard]] inline double area_km2(const MultiPolygon& mp, const ProjectionContext& ctx) {
    double a = 0.0;
    for (const auto& p : mp.parts) a += area_km2(p, ctx);
    return a;
}

namespace detail {

namespace bg = boost::geometry;
using BgPoint = bg::model::d2::point_xy<double>;
using BgPolygon = bg::model::polygon<BgPoint, false, true>;  // counter-clockwise, closed
using BgMulti = bg::model::multi_polygon<BgPolygon>;

// Parts thinner than this (in degree^2) are overlay slivers.
inline constexpr double sliver_deg2 = empty_area_km2 / (km_per_degree * km_per_degree);

template <typename BgRing>
void fill_ring(BgRing& out, const Ring& ring) {
    out.clear();
    out.reserve(ring.size() + 1);
    for (const auto& p : ring) out.emplace_back(p.lon, p.lat);
    if (!ring.empty()) out.emplace_back(ring.front().lon, ring.front().lat);
}

inline BgMulti to_bg(const MultiPolygon& mp) {
    BgMulti out;
    out.reserve(mp.parts.size());
    for (const auto& part : mp.parts) {
        BgPolygon poly;
        fill_ring(poly.outer(), part.outer);
        for (const auto& h : part.holes) {
            poly.inners().emplace_back();
            fill_ring(poly.inners().back(), h);
        }
        out.push_back(std::move(poly));
    }
    bg::correct(out);
    return out;
}

template <typename BgRing>
Ring from_bg_ring(const BgRing& r) {
    Ring out;
    out.reserve(r.size());
    for (const auto& p : r) out.push_back({p.x(), p.y()});
    return clean_ring(std::move(out));
}

inline MultiPolygon from_bg(const BgMulti& mp) {
    MultiPolygon out;
    for (const auto& poly : mp) {
        Polygon p;
        p.outer = from_bg_ring(poly.outer());
        if (p.outer.size() < 3 || std::abs(signed_area_deg2(p.outer)) <= sliver_deg2) continue;
        for (const auto& h : poly.inners()) {
            Ring r = from_bg_ring(h);
            if (r.size() >= 3 && std::abs(signed_area_deg2(r)) > sliver_deg2) p.holes.push_back(std::move(r));
        }
        out.parts.push_back(normalize(std::move(p)));
    }
    return out;
}

inline BgMulti intersect_bg(const BgMulti& a, const BgMulti& b) {
    BgMulti out;
    bg::intersection(a, b, out);
    return out;
}

} // namespace detail

// Point set a ∩ b. Inputs may be non-convex and carry holes.
[[nodiscard]] inline MultiPolygon intersect(const MultiPolygon& a, const MultiPolygon& b) {
    if (a.empty() || b.empty()) return {};
    const BoundingBox ba = bounding_box(a), bb = bounding_box(b);
    if (!ba.intersects(bb)) return {};
    return detail::from_bg(detail::intersect_bg(detail::to_bg(a), detail::to_bg(b)));
}

[[nodiscard]] inline MultiPolygon unite(const MultiPolygon& a, const MultiPolygon& b) {
    detail::BgMulti out;
    detail::bg::union_(detail::to_bg(a), detail::to_bg(b), out);
    return detail::from_bg(out);
}

// Andrew's monotone chain. Output is counter-clockwise without collinear vertices.
[[nodiscard]] inline Polygon convex_hull(std::span<const GeoPoint> points) {
    if (points.size() < 3) throw DataError("convex hull needs at least 3 points");
    std::vector<GeoPoint> pts(points.begin(), points.end());
    std::sort(pts.begin(), pts.end());
    pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
    auto cross = [](const GeoPoint& o, const GeoPoint& a, const GeoPoint& b) {
        return (a.lon - o.lon) * (b.lat - o.lat) - (a.lat - o.lat) * (b.lon - o.lon);
    };
    std::vector<GeoPoint> hull(2 * pts.size());
    std::size_t k = 0;
    for (const auto& p : pts) {
        while (k >= 2 && cross(hull[k - 2], hull[k - 1], p) <= 0.0) --k;
        hull[k++] = p;
    }
    for (std::size_t i = pts.size() - 1, lower = k + 1; i-- > 0;) {
        while (k >= lower && cross(hull[k - 2], hull[k - 1], pts[i]) <= 0.0) --k;
        hull[k++] = pts[i];
    }
    hull.resize(k > 0 ? k - 1 : 0);
    if (hull.size() < 3 || std::abs(signed_area_deg2(hull)) <= detail::sliver_deg2)
        throw DataError("convex hull of collinear points is degenerate");
    return Polygon{std::move(hull), {}};
}

// Area-weighted centroid in the projected plane.
[[nodiscard]] inline GeoPoint centroid(const MultiPolygon& mp, const ProjectionContext& ctx) {
    double a = 0.0, cx = 0.0, cy = 0.0;
    auto add_ring = [&](const Ring& ring) {
        const std::size_t n = ring.size();
        for (std::size_t i = 0; i < n; ++i) {
            const PlanarPoint p = project(ctx, ring[i]);
            const PlanarPoint q = project(ctx, ring[(i + 1) % n]);
            const double c = p.x * q.y - q.x * p.y;
            a += c;
            cx += (p.x + q.x) * c;
            cy += (p.y + q.y) * c;
        }
    };
    for (const auto& part : mp.parts) {
        add_ring(part.outer);
        for (const auto& h : part.holes) add_ring(h);
    }
    a *= 0.5;
    if (std::abs(a) <= empty_area_km2) throw DataError("centroid of zero-area geometry");
    return unproject(ctx, {cx / (6.0 * a), cy / (6.0 * a)});
}

[[nodiscard]] inline GeoPoint centroid(const MultiPolygon& mp) {
    return centroid(mp, context_at(bounding_box(mp).center()));
}

[[nodiscard]] inline GeoPoint centroid(const Polygon& poly) { return centroid(MultiPolygon{{poly}}); }

namespace detail {

inline double point_segment_distance(const GeoPoint& p, const GeoPoint& a, const GeoPoint& b) {
    const double dx = b.lon - a.lon, dy = b.lat - a.lat;
    const double len2 = dx * dx + dy * dy;
    double t = len2 > 0.0 ? ((p.lon - a.lon) * dx + (p.lat - a.lat) * dy) / len2 : 0.0;
    t = std::clamp(t, 0.0, 1.0);
    return std::hypot(p.lon - (a.lon + t * dx), p.lat - (a.lat + t * dy));
}

enum class Location { outside, boundary, inside };

inline Location locate(const Ring& ring, const GeoPoint& p) {
    const std::size_t n = ring.size();
    bool in = false;
    for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
        const auto& a = ring[i];
        const auto& b = ring[j];
        if (point_segment_distance(p, a, b) <= coord_tolerance_deg) return Location::boundary;
        if ((a.lat > p.lat) != (b.lat > p.lat)) {
            const double x = a.lon + (p.lat - a.lat) * (b.lon - a.lon) / (b.lat - a.lat);
            if (p.lon < x) in = !in;
        }
    }
    return in ? Location::inside : Location::outside;
}

} // namespace detail

// Closed point-set membership: boundary points are inside.
[[nodiscard]] inline bool contains(const Polygon& poly, const GeoPoint& p) {
    const auto outer = detail::locate(poly.outer, p);
    if (outer == detail::Location::outside) return false;
    if (outer == detail::Location::boundary) return true;
    for (const auto& h : poly.holes) {
        if (detail::locate(h, p) == detail::Location::inside) return false;
    }
    return true;
}

[[nodiscard]] inline bool contains(const MultiPolygon& mp, const GeoPoint& p) {
    return std::any_of(mp.parts.begin(), mp.parts.end(), [&](const Polygon& part) { return contains(part, p); });
}

[[nodiscard]] inline double haversine_km(const GeoPoint& a, const GeoPoint& b) {
    constexpr double rad = std::numbers::pi / 180.0;
    const double dlat = (b.lat - a.lat) * rad;
    const double dlon = (b.lon - a.lon) * rad;
    const double s = std::sin(dlat / 2) * std::sin(dlat / 2) +
                     std::cos(a.lat * rad) * std::cos(b.lat * rad) * std::sin(dlon / 2) * std::sin(dlon / 2);
    return 2.0 * earth_radius_km * std::asin(std::min(1.0, std::sqrt(s)));
}

} // namespace laspated::geo
