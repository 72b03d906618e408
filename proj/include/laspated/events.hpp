#pragma once

// Event ingestion and aggregation into per-occurrence count lists.
//
// A cell is (time indices..., region, features...). Each periodic time-index
// combination recurs over the data horizon [first day 00:00, last day + 1);
// every recurrence is one occurrence, and a cell keeps one count per
// occurrence of its time combination.

#include "error.hpp"
#include "geojson.hpp"
#include "geometry.hpp"
#include "io_formats.hpp"
#include "spatial_discretization.hpp"
#include "time_discretization.hpp"

#include <algorithm>
#include <charconv>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

namespace laspated {

struct EventRecord {
    time::Timestamp ts;
    geo::GeoPoint location;
    std::vector<std::int64_t> features;
};

struct LoadOptions {
    std::string datetime_col = "date_time";
    std::string lat_col = "lat";
    std::string lon_col = "long";
    std::vector<std::string> feature_cols;
    std::optional<std::string> datetime_format;  // strptime-style; ISO and dd/mm/YYYY are detected otherwise
};

struct EventTable {
    std::vector<EventRecord> records;
    std::vector<std::string> feature_names;
    std::vector<std::vector<std::string>> legends;  // per feature, label of each code
    std::vector<time::TimeDiscretization> discretizations;
    std::vector<std::vector<std::int64_t>> tdiscr;  // per record, one index per discretization
    std::vector<std::optional<std::size_t>> gdiscr;
    std::size_t regions = 0;
    bool has_space = false;

    [[nodiscard]] std::size_t size() const noexcept { return records.size(); }

    [[nodiscard]] std::vector<geo::GeoPoint> points() const {
        std::vector<geo::GeoPoint> p;
        p.reserve(records.size());
        for (const auto& r : records) p.push_back(r.location);
        return p;
    }

    [[nodiscard]] time::Timestamp earliest() const {
        if (records.empty()) throw DataError("no events");
        return std::min_element(records.begin(), records.end(), [](auto& a, auto& b) { return a.ts < b.ts; })->ts;
    }
    [[nodiscard]] time::Timestamp latest() const {
        if (records.empty()) throw DataError("no events");
        return std::max_element(records.begin(), records.end(), [](auto& a, auto& b) { return a.ts < b.ts; })->ts;
    }
    [[nodiscard]] time::Anchor anchor() const { return time::Anchor::from_earliest(earliest()); }
};

namespace detail {

inline std::vector<std::string> split_csv(std::string_view line, char delim) {
    std::vector<std::string> out(1);
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char ch = line[i];
        if (quoted) {
            if (ch == '"' && i + 1 < line.size() && line[i + 1] == '"') {
                out.back() += '"';
                ++i;
            } else if (ch == '"') {
                quoted = false;
            } else {
                out.back() += ch;
            }
        } else if (ch == '"') {
            quoted = true;
        } else if (ch == delim) {
            out.emplace_back();
        } else {
            out.back() += ch;
        }
    }
    for (auto& f : out) f = std::string(time::detail::trim(f));
    return out;
}

inline double parse_coord(const std::string& s, const std::string& where, const char* what) {
    double v = 0.0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || res.ec != std::errc{} || res.ptr != s.data() + s.size())
        throw DataError(where + "invalid " + what + " '" + s + "'");
    return v;
}

} // namespace detail

[[nodiscard]] inline EventTable load_events(const std::string& path, const LoadOptions& opt) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open '" + path + "'");
    std::string header;
    if (!std::getline(in, header)) throw DataError(path + ": missing header line");
    if (!header.empty() && header.back() == '\r') header.pop_back();
    const char delim = header.find(';') != std::string::npos ? ';' : ',';
    const auto cols = detail::split_csv(header, delim);
    auto column = [&](const std::string& name) {
        const auto it = std::find(cols.begin(), cols.end(), name);
        if (it == cols.end()) throw DataError(path + ": missing column '" + name + "'");
        return static_cast<std::size_t>(it - cols.begin());
    };
    const auto c_time = column(opt.datetime_col), c_lat = column(opt.lat_col), c_lon = column(opt.lon_col);
    std::vector<std::size_t> c_feat;
    for (const auto& f : opt.feature_cols) c_feat.push_back(column(f));

    EventTable table;
    table.feature_names = opt.feature_cols;
    table.legends.resize(c_feat.size());
    std::vector<std::map<std::string, std::int64_t>> codes(c_feat.size());
    std::string line;
    for (std::size_t lineno = 2; std::getline(in, line); ++lineno) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (time::detail::trim(line).empty()) continue;
        const auto fields = detail::split_csv(line, delim);
        const std::string where = path + ":" + std::to_string(lineno) + ": ";
        if (fields.size() != cols.size())
            throw DataError(where + "expected " + std::to_string(cols.size()) + " fields, found " + std::to_string(fields.size()));
        EventRecord rec;
        const auto ts = opt.datetime_format ? time::parse_timestamp(fields[c_time], *opt.datetime_format)
                                            : time::parse_timestamp(fields[c_time]);
        if (!ts) throw DataError(where + "unparsable timestamp '" + fields[c_time] + "'");
        rec.ts = *ts;
        rec.location = {detail::parse_coord(fields[c_lon], where, "longitude"), detail::parse_coord(fields[c_lat], where, "latitude")};
        try {
            geo::validate_point(rec.location);
        } catch (const Error& e) {
            throw DataError(where + e.what());
        }
        for (std::size_t f = 0; f < c_feat.size(); ++f) {
            const auto& label = fields[c_feat[f]];
            auto [it, fresh] = codes[f].try_emplace(label, static_cast<std::int64_t>(table.legends[f].size()));
            if (fresh) table.legends[f].push_back(label);
            rec.features.push_back(it->second);
        }
        table.records.push_back(std::move(rec));
    }
    return table;
}

// Adds one time-index column computed against the table's anchor.
inline void attach_time(EventTable& table, time::TimeDiscretization disc) {
    table.tdiscr.resize(table.size());
    if (!table.records.empty()) {
        const auto anchor = table.anchor();
        for (std::size_t k = 0; k < table.size(); ++k)
            table.tdiscr[k].push_back(time::time_index(disc, table.records[k].ts, anchor));
    }
    table.discretizations.push_back(std::move(disc));
}

inline void attach_space(EventTable& table, const RegionSet& rs) {
    table.gdiscr.clear();
    for (const auto& r : table.records) table.gdiscr.push_back(rs.assign_region(r.location));
    table.regions = rs.size();
    table.has_space = true;
}

struct Occurrence {
    time::Timestamp begin, end;
};

using CellKey = std::vector<std::int64_t>;  // time indices..., region, features...

class AggregatedCounts {
public:
    std::vector<std::size_t> dims;  // time index ranges..., R, feature cardinalities...
    std::size_t n_time = 0;
    std::size_t n_features = 0;
    std::map<CellKey, std::vector<Occurrence>> ledger;                   // time combination -> occurrences
    std::map<CellKey, std::map<std::size_t, std::int64_t>> cells;        // nonzero counts by occurrence
    std::size_t aggregated = 0;
    std::size_t dropped = 0;

    [[nodiscard]] std::size_t occurrences(const CellKey& time_combo) const {
        const auto it = ledger.find(time_combo);
        return it == ledger.end() ? 0 : it->second.size();
    }

    // Full count list of a cell, zeros included.
    [[nodiscard]] std::vector<std::int64_t> counts(const CellKey& key) const {
        if (key.size() != dims.size()) throw DataError("cell key has the wrong length");
        std::vector<std::int64_t> out(occurrences(CellKey(key.begin(), key.begin() + static_cast<std::ptrdiff_t>(n_time))), 0);
        if (const auto it = cells.find(key); it != cells.end())
            for (const auto& [occ, n] : it->second) out[occ] = n;
        return out;
    }

    [[nodiscard]] std::int64_t total() const {
        std::int64_t s = 0;
        for (const auto& [key, list] : cells)
            for (const auto& [occ, n] : list) s += n;
        return s;
    }
};

inline constexpr std::size_t max_occurrence_runs = 20'000'000;

[[nodiscard]] inline AggregatedCounts aggregate(const EventTable& table) {
    if (table.records.empty()) throw DataError("cannot aggregate an empty event table");
    if (!table.has_space) throw DataError("attach a space discretization before aggregating");
    using namespace std::chrono;
    AggregatedCounts agg;
    agg.n_time = table.discretizations.size();
    agg.n_features = table.feature_names.size();
    for (const auto& d : table.discretizations) agg.dims.push_back(static_cast<std::size_t>(time::index_range(d)));
    agg.dims.push_back(table.regions);
    for (const auto& l : table.legends) agg.dims.push_back(l.size());

    // Consecutive runs of constant time combination over the horizon.
    const auto anchor = table.anchor();
    const time::Timestamp start = time_point_cast<seconds>(floor<days>(table.earliest()));
    const time::Timestamp stop = time_point_cast<seconds>(floor<days>(table.latest()) + days{1});
    struct Run {
        time::Timestamp begin;
        std::size_t occurrence;
        const CellKey* combo;
    };
    std::vector<Run> runs;
    CellKey prev;
    for (time::Timestamp ts = start; ts < stop;) {
        CellKey combo;
        time::Timestamp next = stop;
        for (const auto& d : table.discretizations) {
            combo.push_back(time::time_index(d, ts, anchor));
            next = std::min(next, time::next_boundary(d, ts, anchor));
        }
        if (!runs.empty() && combo == prev) {
            agg.ledger[combo].back().end = next;
        } else {
            auto& occ = agg.ledger[combo];
            occ.push_back({ts, next});
            runs.push_back({ts, occ.size() - 1, &agg.ledger.find(combo)->first});
            if (runs.size() > max_occurrence_runs) throw DataError("time discretization too fine for the data horizon");
            prev = std::move(combo);
        }
        ts = next;
    }

    for (std::size_t k = 0; k < table.size(); ++k) {
        const auto& g = table.gdiscr[k];
        if (!g) {
            ++agg.dropped;
            continue;
        }
        const auto& rec = table.records[k];
        const auto it = std::upper_bound(runs.begin(), runs.end(), rec.ts,
                                         [](time::Timestamp t, const Run& r) { return t < r.begin; });
        const Run& run = *(it - 1);
        if (*run.combo != table.tdiscr[k]) throw Error("internal: occurrence ledger disagrees with time indices");
        CellKey key = table.tdiscr[k];
        key.push_back(static_cast<std::int64_t>(*g));
        key.insert(key.end(), rec.features.begin(), rec.features.end());
        ++agg.cells[key][run.occurrence];
        ++agg.aggregated;
    }
    return agg;
}

// --- calibration files ----------------------------------------------------

namespace detail {

inline void require_calibration_shape(const AggregatedCounts& agg) {
    if (agg.n_time != 2)
        throw DataError("calibration files need exactly two time discretizations (period of day, day of week), got " +
                        std::to_string(agg.n_time));
    if (agg.n_features > 1) throw DataError("calibration files allow at most one feature column (the arrival type)");
}

} // namespace detail

struct ArrivalsOptions {
    bool include_zeros = false;
};

// Entries `t g r c j count 0`, j the occurrence of (t,g).
[[nodiscard]] inline std::vector<io::ArrivalEntry> arrival_entries(const AggregatedCounts& agg,
                                                                   const ArrivalsOptions& opt = {}) {
    detail::require_calibration_shape(agg);
    std::vector<io::ArrivalEntry> out;
    auto entry = [](const CellKey& key, std::size_t j, std::int64_t n) {
        return io::ArrivalEntry{key[0], key[1], key[2], key.size() > 3 ? key[3] : 0, static_cast<std::int64_t>(j), n, false};
    };
    if (!opt.include_zeros) {
        for (const auto& [key, list] : agg.cells)
            for (const auto& [occ, n] : list) out.push_back(entry(key, occ, n));
        return out;
    }
    const auto C = agg.n_features ? agg.dims[3] : 1;
    for (std::int64_t t = 0; t < static_cast<std::int64_t>(agg.dims[0]); ++t)
        for (std::int64_t g = 0; g < static_cast<std::int64_t>(agg.dims[1]); ++g)
            for (std::int64_t r = 0; r < static_cast<std::int64_t>(agg.dims[2]); ++r)
                for (std::int64_t c = 0; c < static_cast<std::int64_t>(C); ++c) {
                    CellKey key{t, g, r};
                    if (agg.n_features) key.push_back(c);
                    const auto list = agg.counts(key);
                    for (std::size_t j = 0; j < list.size(); ++j) out.push_back(entry(key, j, list[j]));
                }
    return out;
}

inline void write_arrivals(const AggregatedCounts& agg, const std::string& path, const ArrivalsOptions& opt = {}) {
    io::write_arrivals(arrival_entries(agg, opt), path);
}

// N_g is the largest occurrence count over the periods of day g.
[[nodiscard]] inline io::Info calibration_info(const AggregatedCounts& agg, std::int64_t J) {
    detail::require_calibration_shape(agg);
    io::Info info;
    info.T = static_cast<std::int64_t>(agg.dims[0]);
    info.G = static_cast<std::int64_t>(agg.dims[1]);
    info.R = static_cast<std::int64_t>(agg.dims[2]);
    info.C = agg.n_features ? static_cast<std::int64_t>(agg.dims[3]) : 1;
    info.J = J;
    info.H = 0;
    for (std::int64_t g = 0; g < info.G; ++g) {
        std::size_t n = 0;
        for (std::int64_t t = 0; t < info.T; ++t) n = std::max(n, agg.occurrences({t, g}));
        info.observations.push_back(static_cast<std::int64_t>(n));
    }
    return info;
}

inline void write_info(const AggregatedCounts& agg, std::int64_t J, const std::string& path) {
    io::write_info(calibration_info(agg, J), path);
}

// Covariate columns: every region attribute except grid_index, by name.
[[nodiscard]] inline std::vector<std::string> covariate_names(const RegionSet& rs) {
    std::vector<std::string> names;
    for (const auto& r : rs.regions())
        for (const auto& [name, v] : r.attributes)
            if (name != "grid_index" && std::find(names.begin(), names.end(), name) == names.end()) names.push_back(name);
    std::sort(names.begin(), names.end());
    return names;
}

[[nodiscard]] inline std::vector<io::Zone> zones(const RegionSet& rs) {
    const auto names = covariate_names(rs);
    std::vector<io::Zone> out;
    for (const auto& r : rs.regions()) {
        io::Zone z;
        z.id = static_cast<std::int64_t>(r.id);
        z.lat = r.centroid.lat;
        z.lon = r.centroid.lon;
        for (const auto& n : names) {
            const auto it = r.attributes.find(n);
            z.covariates.push_back(it == r.attributes.end() ? 0.0 : it->second);
        }
        for (std::size_t j : r.neighbors)
            z.neighbors.emplace_back(static_cast<std::int64_t>(j), geo::haversine_km(r.centroid, rs[j].centroid));
        out.push_back(std::move(z));
    }
    return out;
}

inline void write_regions(const RegionSet& rs, const std::string& path) { io::write_neighbors(zones(rs), path); }

inline void write_legend(const EventTable& table, const std::string& path) {
    geojson::json doc = geojson::json::object();
    for (std::size_t f = 0; f < table.feature_names.size(); ++f) doc[table.feature_names[f]] = table.legends[f];
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write '" + path + "'");
    out << doc.dump(2) << '\n';
}

} // namespace laspated
