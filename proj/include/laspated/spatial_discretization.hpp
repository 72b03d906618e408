#pragma once

#include "error.hpp"
#include "geojson.hpp"
#include "geometry.hpp"

#include <boost/geometry/index/rtree.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <map>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace laspated {

struct Border {
    geo::MultiPolygon geometry;
    geo::ProjectionContext ctx;
    geo::BoundingBox bbox;
    double area_km2 = 0.0;
};

struct Region {
    std::size_t id = 0;
    geo::MultiPolygon geometry;
    geo::GeoPoint centroid;
    double area_km2 = 0.0;
    geo::BoundingBox bbox;
    std::vector<std::size_t> neighbors;  // sorted
    std::map<std::string, double> attributes;
};

// Shared-boundary length (km) above which two regions are neighbors.
inline constexpr double min_shared_edge_km = 1e-6;
inline constexpr std::size_t max_hex_cells = 1'000'000;

namespace detail {

namespace bgi = boost::geometry::index;
using BgBox = boost::geometry::model::box<geo::detail::BgPoint>;
using IndexEntry = std::pair<BgBox, std::size_t>;
using RegionIndex = bgi::rtree<IndexEntry, bgi::quadratic<16>>;

inline BgBox to_box(const geo::BoundingBox& b, double pad = 0.0) {
    return {{b.min_lon - pad, b.min_lat - pad}, {b.max_lon + pad, b.max_lat + pad}};
}

} // namespace detail

// Indexed partition of a border. Ids are 0..size()-1 in generation order.
class RegionSet {
public:
    RegionSet() = default;

    // Takes clipped geometries in generation order; computes ids, areas,
    // centroids and the point-location index. Adjacency is left empty.
    RegionSet(geo::ProjectionContext ctx, std::vector<Region> regions) : ctx_(ctx), regions_(std::move(regions)) {
        for (std::size_t i = 0; i < regions_.size(); ++i) {
            Region& r = regions_[i];
            r.id = i;
            r.area_km2 = geo::area_km2(r.geometry, ctx_);
            r.bbox = geo::bounding_box(r.geometry);
            r.centroid = geo::centroid(r.geometry, ctx_);
        }
        rebuild_index();
    }

    [[nodiscard]] std::size_t size() const noexcept { return regions_.size(); }
    [[nodiscard]] bool empty() const noexcept { return regions_.empty(); }
    [[nodiscard]] const Region& operator[](std::size_t i) const { return regions_.at(i); }
    [[nodiscard]] std::span<const Region> regions() const noexcept { return regions_; }
    [[nodiscard]] const geo::ProjectionContext& ctx() const noexcept { return ctx_; }

    [[nodiscard]] double total_area_km2() const {
        double a = 0.0;
        for (const auto& r : regions_) a += r.area_km2;
        return a;
    }

    void set_attribute(const std::string& name, std::span<const double> values) {
        if (values.size() != regions_.size())
            throw DataError("attribute '" + name + "': expected " + std::to_string(regions_.size()) + " values");
        for (std::size_t i = 0; i < regions_.size(); ++i) regions_[i].attributes[name] = values[i];
    }

    void set_neighbors(std::vector<std::vector<std::size_t>> nbrs) {
        if (nbrs.size() != regions_.size()) throw DataError("neighbor list size mismatch");
        for (std::size_t i = 0; i < regions_.size(); ++i) {
            std::sort(nbrs[i].begin(), nbrs[i].end());
            regions_[i].neighbors = std::move(nbrs[i]);
        }
    }

    // Candidate ids whose bounding box meets `box` (padded by `pad` degrees), ascending.
    [[nodiscard]] std::vector<std::size_t> candidates(const geo::BoundingBox& box, double pad = 0.0) const {
        std::vector<detail::IndexEntry> hits;
        index_.query(detail::bgi::intersects(detail::to_box(box, pad)), std::back_inserter(hits));
        std::vector<std::size_t> ids;
        ids.reserve(hits.size());
        for (const auto& h : hits) ids.push_back(h.second);
        std::sort(ids.begin(), ids.end());
        return ids;
    }

    // Region containing p; on shared boundaries the smaller id wins.
    [[nodiscard]] std::optional<std::size_t> assign_region(const geo::GeoPoint& p) const {
        geo::BoundingBox b;
        b.extend(p);
        for (std::size_t id : candidates(b, geo::coord_tolerance_deg)) {
            if (geo::contains(regions_[id].geometry, p)) return id;
        }
        return std::nullopt;
    }

private:
    void rebuild_index() {
        std::vector<detail::IndexEntry> entries;
        entries.reserve(regions_.size());
        for (const auto& r : regions_) entries.emplace_back(detail::to_box(r.bbox), r.id);
        index_ = detail::RegionIndex(entries.begin(), entries.end());
    }

    geo::ProjectionContext ctx_;
    std::vector<Region> regions_;
    detail::RegionIndex index_;
};

// --- borders -------------------------------------------------------------

[[nodiscard]] inline Border border_from_map(geo::MultiPolygon geometry) {
    geometry = geo::normalize(std::move(geometry));
    if (geometry.empty()) throw DataError("border geometry is empty");
    Border b;
    b.bbox = geo::bounding_box(geometry);
    b.ctx = geo::context_at(b.bbox.center());
    b.area_km2 = geo::area_km2(geometry, b.ctx);
    if (b.area_km2 <= geo::empty_area_km2) throw DataError("border geometry has zero area");
    b.geometry = std::move(geometry);
    return b;
}

// Union of all polygonal features of a GeoJSON document.
[[nodiscard]] inline Border border_from_features(const std::vector<geojson::Feature>& features) {
    geo::MultiPolygon merged;
    for (const auto& f : features) {
        if (f.shape.empty()) continue;
        merged = merged.empty() ? f.shape : geo::unite(merged, f.shape);
    }
    return border_from_map(std::move(merged));
}

[[nodiscard]] inline Border border_rectangle(std::span<const geo::GeoPoint> events) {
    if (events.empty()) throw DataError("rectangular border needs at least one event");
    const auto box = geo::bounding_box(events);
    if (box.max_lon - box.min_lon <= geo::coord_tolerance_deg || box.max_lat - box.min_lat <= geo::coord_tolerance_deg)
        throw DataError("rectangular border of the events has zero area");
    return border_from_map(geo::as_multi(geo::rectangle(box.min_lon, box.min_lat, box.max_lon, box.max_lat)));
}

[[nodiscard]] inline Border border_convex(std::span<const geo::GeoPoint> events) {
    return border_from_map(geo::as_multi(geo::convex_hull(events)));
}

// --- adjacency -----------------------------------------------------------

namespace detail {

struct Segment {
    geo::PlanarPoint a, b;
    geo::BoundingBox box;  // in degrees, for filtering
};

inline std::vector<Segment> boundary_segments(const Region& r, const geo::ProjectionContext& ctx) {
    std::vector<Segment> out;
    auto add_ring = [&](const geo::Ring& ring) {
        for (std::size_t i = 0; i < ring.size(); ++i) {
            const auto& p = ring[i];
            const auto& q = ring[(i + 1) % ring.size()];
            Segment s{geo::project(ctx, p), geo::project(ctx, q), {}};
            s.box.extend(p);
            s.box.extend(q);
            out.push_back(s);
        }
    };
    for (const auto& part : r.geometry.parts) {
        add_ring(part.outer);
        for (const auto& h : part.holes) add_ring(h);
    }
    return out;
}

// Length of the collinear overlap of two segments, 0 if they are not collinear.
inline double collinear_overlap(const Segment& s, const Segment& t, double tol_km) {
    const double dx = s.b.x - s.a.x, dy = s.b.y - s.a.y;
    const double len = std::hypot(dx, dy);
    if (len <= 0.0) return 0.0;
    const double ux = dx / len, uy = dy / len;
    auto off_line = [&](const geo::PlanarPoint& p) { return std::abs(ux * (p.y - s.a.y) - uy * (p.x - s.a.x)); };
    if (off_line(t.a) > tol_km || off_line(t.b) > tol_km) return 0.0;
    const double ta = ux * (t.a.x - s.a.x) + uy * (t.a.y - s.a.y);
    const double tb = ux * (t.b.x - s.a.x) + uy * (t.b.y - s.a.y);
    const double lo = std::max(0.0, std::min(ta, tb));
    const double hi = std::min(len, std::max(ta, tb));
    return std::max(0.0, hi - lo);
}

} // namespace detail

// Rook adjacency: regions sharing a boundary stretch longer than min_shared_edge_km.
inline void compute_adjacency(RegionSet& rs) {
    const auto& ctx = rs.ctx();
    const double pad = 1e-8;  // degrees, about a millimetre
    std::vector<std::vector<detail::Segment>> segs(rs.size());
    for (std::size_t i = 0; i < rs.size(); ++i) segs[i] = detail::boundary_segments(rs[i], ctx);

    std::vector<std::vector<std::size_t>> nbrs(rs.size());
    for (std::size_t i = 0; i < rs.size(); ++i) {
        for (std::size_t j : rs.candidates(rs[i].bbox, pad)) {
            if (j <= i) continue;
            geo::BoundingBox overlap{std::max(rs[i].bbox.min_lon, rs[j].bbox.min_lon) - pad,
                                     std::max(rs[i].bbox.min_lat, rs[j].bbox.min_lat) - pad,
                                     std::min(rs[i].bbox.max_lon, rs[j].bbox.max_lon) + pad,
                                     std::min(rs[i].bbox.max_lat, rs[j].bbox.max_lat) + pad};
            std::vector<const detail::Segment*> si, sj;
            for (const auto& s : segs[i])
                if (s.box.intersects(overlap)) si.push_back(&s);
            for (const auto& s : segs[j])
                if (s.box.intersects(overlap)) sj.push_back(&s);
            double shared = 0.0;
            for (const auto* a : si) {
                for (const auto* b : sj) {
                    if (!a->box.intersects(b->box, pad)) continue;
                    shared += detail::collinear_overlap(*a, *b, min_shared_edge_km);
                }
            }
            if (shared > min_shared_edge_km) {
                nbrs[i].push_back(j);
                nbrs[j].push_back(i);
            }
        }
    }
    rs.set_neighbors(std::move(nbrs));
}

// --- discretizations ----------------------------------------------------

namespace detail {

// Clips candidate cells to the border, keeps nonempty ones, records grid_index.
inline RegionSet clip_cells(const Border& border, const std::vector<geo::MultiPolygon>& cells) {
    const auto border_bg = geo::detail::to_bg(border.geometry);
    std::vector<Region> kept;
    for (std::size_t g = 0; g < cells.size(); ++g) {
        if (cells[g].empty() || !geo::bounding_box(cells[g]).intersects(border.bbox)) continue;
        auto clipped = geo::detail::from_bg(geo::detail::intersect_bg(geo::detail::to_bg(cells[g]), border_bg));
        if (clipped.empty() || geo::area_km2(clipped, border.ctx) <= geo::empty_area_km2) continue;
        Region r;
        r.geometry = std::move(clipped);
        r.attributes["grid_index"] = static_cast<double>(g);
        kept.push_back(std::move(r));
    }
    RegionSet rs(border.ctx, std::move(kept));
    compute_adjacency(rs);
    return rs;
}

} // namespace detail

// nx*ny equal rectangles over the border's bounding box, row-major with x fastest.
[[nodiscard]] inline RegionSet discretize_rect(const Border& border, std::size_t nx, std::size_t ny) {
    if (nx == 0 || ny == 0) throw DataError("rectangular discretization needs nx, ny >= 1");
    const auto& b = border.bbox;
    std::vector<double> xs(nx + 1), ys(ny + 1);
    for (std::size_t i = 0; i <= nx; ++i)
        xs[i] = i == nx ? b.max_lon : b.min_lon + (b.max_lon - b.min_lon) * static_cast<double>(i) / static_cast<double>(nx);
    for (std::size_t j = 0; j <= ny; ++j)
        ys[j] = j == ny ? b.max_lat : b.min_lat + (b.max_lat - b.min_lat) * static_cast<double>(j) / static_cast<double>(ny);
    std::vector<geo::MultiPolygon> cells;
    cells.reserve(nx * ny);
    for (std::size_t j = 0; j < ny; ++j)
        for (std::size_t i = 0; i < nx; ++i) cells.push_back(geo::as_multi(geo::rectangle(xs[i], ys[j], xs[i + 1], ys[j + 1])));
    return detail::clip_cells(border, cells);
}

// Pointy-top hexagons of circumradius Lmax * 2^-scale, Lmax the longer bbox side in km.
[[nodiscard]] inline RegionSet discretize_hex(const Border& border, int scale) {
    if (scale < 1 || scale > 16) throw DataError("hexagon scale must be in 1..16");
    const auto& ctx = border.ctx;
    const auto lo = geo::project(ctx, {border.bbox.min_lon, border.bbox.min_lat});
    const auto hi = geo::project(ctx, {border.bbox.max_lon, border.bbox.max_lat});
    const double width = hi.x - lo.x, height = hi.y - lo.y;
    const double rho = std::max(width, height) * std::ldexp(1.0, -scale);
    const double dx = std::sqrt(3.0) * rho, dy = 1.5 * rho;
    const auto cols = static_cast<std::size_t>(std::ceil(width / dx)) + 3;
    const auto rows = static_cast<std::size_t>(std::ceil(height / dy)) + 3;
    if (static_cast<double>(cols) * static_cast<double>(rows) > static_cast<double>(max_hex_cells))
        throw DataError("hexagon scale " + std::to_string(scale) + " yields more than 1e6 cells");

    std::array<geo::PlanarPoint, 6> corner{};
    for (int k = 0; k < 6; ++k) {
        const double ang = std::numbers::pi / 180.0 * (30.0 + 60.0 * k);
        corner[k] = {rho * std::cos(ang), rho * std::sin(ang)};
    }
    std::vector<geo::MultiPolygon> cells;
    cells.reserve(cols * rows);
    for (std::size_t r = 0; r < rows; ++r) {
        const double cy = lo.y + (static_cast<double>(r) - 1.0) * dy;
        const double shift = (r % 2 == 1) ? 0.5 * dx : 0.0;
        for (std::size_t c = 0; c < cols; ++c) {
            const double cx = lo.x + (static_cast<double>(c) - 1.0) * dx + shift;
            geo::Polygon hex;
            for (const auto& v : corner) hex.outer.push_back(geo::unproject(ctx, {cx + v.x, cy + v.y}));
            cells.push_back(geo::as_multi(std::move(hex)));
        }
    }
    return detail::clip_cells(border, cells);
}

// User cells clipped to the border, input order preserved.
[[nodiscard]] inline RegionSet discretize_custom(const Border& border, const std::vector<geo::MultiPolygon>& cells) {
    RegionSet rs = detail::clip_cells(border, cells);
    for (std::size_t i = 0; i < rs.size(); ++i) {
        for (std::size_t j : rs.candidates(rs[i].bbox)) {
            if (j <= i) continue;
            const double overlap = geo::area_km2(geo::intersect(rs[i].geometry, rs[j].geometry), rs.ctx());
            if (overlap > 1e-6 * std::min(rs[i].area_km2, rs[j].area_km2)) {
                throw DataError("custom cells " + std::to_string(static_cast<long>(rs[i].attributes.at("grid_index"))) +
                                " and " + std::to_string(static_cast<long>(rs[j].attributes.at("grid_index"))) +
                                " overlap");
            }
        }
    }
    return rs;
}

namespace detail {

// Keeps the part of a convex polygon where (p - m) . n <= 0.
inline std::vector<geo::PlanarPoint> clip_half_plane(const std::vector<geo::PlanarPoint>& poly, geo::PlanarPoint m,
                                                     geo::PlanarPoint n) {
    std::vector<geo::PlanarPoint> out;
    const std::size_t k = poly.size();
    auto side = [&](const geo::PlanarPoint& p) { return (p.x - m.x) * n.x + (p.y - m.y) * n.y; };
    for (std::size_t i = 0; i < k; ++i) {
        const auto& p = poly[i];
        const auto& q = poly[(i + 1) % k];
        const double sp = side(p), sq = side(q);
        if (sp <= 0.0) out.push_back(p);
        if ((sp < 0.0 && sq > 0.0) || (sp > 0.0 && sq < 0.0)) {
            const double t = sp / (sp - sq);
            out.push_back({p.x + t * (q.x - p.x), p.y + t * (q.y - p.y)});
        }
    }
    return out;
}

} // namespace detail

// Nearest-seed cells (planar distance in the projected frame) clipped to the border.
[[nodiscard]] inline RegionSet discretize_voronoi(const Border& border, std::span<const geo::GeoPoint> seeds) {
    if (seeds.empty()) throw DataError("Voronoi discretization needs at least one seed");
    for (std::size_t i = 0; i < seeds.size(); ++i)
        for (std::size_t j = i + 1; j < seeds.size(); ++j)
            if (geo::detail::same_point(seeds[i], seeds[j]))
                throw DataError("duplicate Voronoi seeds " + std::to_string(i) + " and " + std::to_string(j));

    const auto& ctx = border.ctx;
    std::vector<geo::PlanarPoint> ps;
    ps.reserve(seeds.size());
    for (const auto& s : seeds) ps.push_back(geo::project(ctx, s));
    const auto lo = geo::project(ctx, {border.bbox.min_lon, border.bbox.min_lat});
    const auto hi = geo::project(ctx, {border.bbox.max_lon, border.bbox.max_lat});
    const double margin = 1.0 + 0.01 * std::max(hi.x - lo.x, hi.y - lo.y);
    const std::vector<geo::PlanarPoint> frame{{lo.x - margin, lo.y - margin},
                                              {hi.x + margin, lo.y - margin},
                                              {hi.x + margin, hi.y + margin},
                                              {lo.x - margin, hi.y + margin}};
    std::vector<geo::MultiPolygon> cells;
    cells.reserve(seeds.size());
    for (std::size_t i = 0; i < ps.size(); ++i) {
        auto cell = frame;
        for (std::size_t j = 0; j < ps.size() && cell.size() >= 3; ++j) {
            if (j == i) continue;
            const geo::PlanarPoint mid{0.5 * (ps[i].x + ps[j].x), 0.5 * (ps[i].y + ps[j].y)};
            cell = detail::clip_half_plane(cell, mid, {ps[j].x - ps[i].x, ps[j].y - ps[i].y});
        }
        geo::Polygon poly;
        for (const auto& p : cell) poly.outer.push_back(geo::unproject(ctx, p));
        poly.outer = geo::detail::clean_ring(std::move(poly.outer));
        if (poly.outer.size() < 3 || std::abs(geo::signed_area_deg2(poly.outer)) <= geo::detail::sliver_deg2) {
            cells.emplace_back();
            continue;
        }
        cells.push_back(geo::as_multi(std::move(poly)));
    }
    return detail::clip_cells(border, cells);
}

// --- export --------------------------------------------------------------

[[nodiscard]] inline geojson::json to_geojson(const RegionSet& rs) {
    std::vector<geojson::Feature> feats;
    feats.reserve(rs.size());
    for (const auto& r : rs.regions()) {
        geojson::Feature f;
        f.shape = r.geometry;
        f.properties = {{"id", r.id},
                        {"neighbors", r.neighbors},
                        {"centroid", {r.centroid.lon, r.centroid.lat}},
                        {"area_km2", r.area_km2}};
        for (const auto& [name, value] : r.attributes) f.properties[name] = value;
        feats.push_back(std::move(f));
    }
    return geojson::feature_collection(feats);
}

} // namespace laspated
