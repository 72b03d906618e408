#pragma once

// Text formats of the calibration app: info, arrivals, neighbors, alpha,
// time groups, cv weights, and the output file. Any whitespace separates
// tokens on read; writers use single spaces and '\n'.

#include "error.hpp"
#include "ndarray.hpp"

#include <charconv>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <utility>
#include <vector>

namespace laspated::io {

enum class ModelType { reg, no_reg };
enum class Method { calibration, cross_validation };

[[nodiscard]] inline ModelType parse_model_type(const std::string& s) {
    if (s == "reg") return ModelType::reg;
    if (s == "no_reg") return ModelType::no_reg;
    throw Error("model_type must be reg or no_reg, got '" + s + "'");
}

[[nodiscard]] inline Method parse_method(const std::string& s) {
    if (s == "calibration") return Method::calibration;
    if (s == "cross_validation") return Method::cross_validation;
    throw Error("method must be calibration or cross_validation, got '" + s + "'");
}

struct Info {
    std::int64_t T = 0;  // periods per day
    std::int64_t G = 0;  // week days
    std::int64_t R = 0;
    std::int64_t C = 0;
    std::int64_t J = 0;  // covariates
    std::int64_t H = 0;  // holidays
    std::vector<std::int64_t> observations;  // N_g for the G week days then the H holidays

    [[nodiscard]] std::int64_t D() const noexcept { return G + H; }
    friend bool operator==(const Info&, const Info&) = default;
};

struct ArrivalEntry {
    std::int64_t t = 0, g = 0, r = 0, c = 0, j = 0;
    std::int64_t count = 0;
    bool holiday = false;  // g then counts holidays, day index G + g

    [[nodiscard]] std::int64_t day(const Info& info) const noexcept { return holiday ? info.G + g : g; }
    friend bool operator==(const ArrivalEntry&, const ArrivalEntry&) = default;
};

struct Zone {
    std::int64_t id = 0;
    double lat = 0.0, lon = 0.0;
    std::int64_t type = 0;
    std::vector<double> covariates;                           // J values
    std::vector<std::pair<std::int64_t, double>> neighbors;  // (index, distance)
    friend bool operator==(const Zone&, const Zone&) = default;
};

struct TimeGroups {
    std::int64_t count = 0;
    std::vector<std::int64_t> index;  // group of each of the D*T periods
    std::vector<double> weights;      // empty when skipped
    friend bool operator==(const TimeGroups&, const TimeGroups&) = default;
};

struct CalibrationBundle {
    Info info;
    std::vector<ArrivalEntry> arrivals;
    std::vector<Zone> zones;
    Array alpha;
    TimeGroups groups;
    std::vector<double> cv_weights;
};

struct InputPaths {
    std::string info, arrivals, neighbors, alpha, time_groups, cv_weights;
};

// --- number formatting ----------------------------------------------------

// Shortest text that reads back to the same double.
[[nodiscard]] inline std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

// Fixed 17 significant digits, trailing zeros kept.
[[nodiscard]] inline std::string format_value17(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%#.17g", v);
    return buf;
}

// --- tokenizing -----------------------------------------------------------

namespace detail {

struct Line {
    std::size_t number = 0;
    std::vector<std::string> tokens;
};

// Non-blank lines up to an optional END marker.
inline std::vector<Line> read_lines(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open '" + path + "'");
    std::vector<Line> out;
    std::string text;
    std::size_t n = 0;
    while (std::getline(in, text)) {
        ++n;
        std::istringstream ss(text);
        Line line{n, {}};
        for (std::string tok; ss >> tok;) line.tokens.push_back(tok);
        if (line.tokens.empty()) continue;
        if (line.tokens.size() == 1 && line.tokens[0] == "END") break;
        out.push_back(std::move(line));
    }
    return out;
}

inline std::string where(const std::string& path, std::size_t line) { return path + ":" + std::to_string(line) + ": "; }

inline std::int64_t to_int(const std::string& tok, const std::string& path, std::size_t line, const char* what) {
    std::int64_t v = 0;
    const auto* end = tok.data() + tok.size();
    const auto res = std::from_chars(tok.data(), end, v);
    if (res.ec != std::errc{} || res.ptr != end)
        throw DataError(where(path, line) + "invalid integer '" + tok + "' for " + what);
    return v;
}

inline double to_double(const std::string& tok, const std::string& path, std::size_t line, const char* what) {
    double v = 0.0;
    const auto* end = tok.data() + tok.size();
    const auto res = std::from_chars(tok.data(), end, v);
    if (res.ec != std::errc{} || res.ptr != end)
        throw DataError(where(path, line) + "invalid number '" + tok + "' for " + what);
    return v;
}

inline std::int64_t in_range(std::int64_t v, std::int64_t hi, const std::string& path, std::size_t line, const char* what) {
    if (v < 0 || v >= hi)
        throw DataError(where(path, line) + what + " " + std::to_string(v) + " out of range [0," + std::to_string(hi) + ")");
    return v;
}

// Flat token stream for formats where line breaks carry no meaning.
struct Tokens {
    std::string path;
    std::vector<std::pair<std::size_t, std::string>> items;
    std::size_t pos = 0;

    explicit Tokens(const std::string& p) : path(p) {
        for (auto& l : read_lines(p))
            for (auto& t : l.tokens) items.emplace_back(l.number, std::move(t));
    }
    [[nodiscard]] bool done() const noexcept { return pos >= items.size(); }
    [[nodiscard]] std::size_t line() const noexcept { return done() ? (items.empty() ? 0 : items.back().first) : items[pos].first; }
    const std::string& next(const char* what) {
        if (done()) throw DataError(where(path, line()) + "unexpected end of file, expected " + what);
        return items[pos++].second;
    }
    std::int64_t next_int(const char* what) {
        const auto l = line();
        return to_int(next(what), path, l, what);
    }
    double next_double(const char* what) {
        const auto l = line();
        return to_double(next(what), path, l, what);
    }
};

inline std::ofstream open_out(const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write '" + path + "'");
    return out;
}

inline void finish(std::ofstream& out, const std::string& path) {
    out.flush();
    if (!out) throw DataError("error writing '" + path + "'");
}

} // namespace detail

// --- info -----------------------------------------------------------------

[[nodiscard]] inline Info read_info(const std::string& path) {
    const auto lines = detail::read_lines(path);
    if (lines.size() != 2) throw DataError(path + ": info file must contain two lines, found " + std::to_string(lines.size()));
    const auto& head = lines[0];
    if (head.tokens.size() != 6) throw DataError(detail::where(path, head.number) + "expected 6 values: T G R C J H");
    Info info;
    std::int64_t* fields[] = {&info.T, &info.G, &info.R, &info.C, &info.J, &info.H};
    const char* names[] = {"T", "G", "R", "C", "J", "H"};
    for (int k = 0; k < 6; ++k) {
        *fields[k] = detail::to_int(head.tokens[k], path, head.number, names[k]);
        if (*fields[k] < 0 || (k < 4 && *fields[k] == 0))
            throw DataError(detail::where(path, head.number) + names[k] + " must be " + (k < 4 ? "positive" : "non-negative"));
    }
    const auto& obs = lines[1];
    if (static_cast<std::int64_t>(obs.tokens.size()) != info.D())
        throw DataError(detail::where(path, obs.number) + "expected " + std::to_string(info.D()) +
                        " observation counts (G + H), found " + std::to_string(obs.tokens.size()));
    for (const auto& t : obs.tokens) {
        const auto v = detail::to_int(t, path, obs.number, "N_g");
        if (v < 0) throw DataError(detail::where(path, obs.number) + "observation counts must be non-negative");
        info.observations.push_back(v);
    }
    return info;
}

inline void write_info(const Info& info, const std::string& path) {
    auto out = detail::open_out(path);
    out << info.T << ' ' << info.G << ' ' << info.R << ' ' << info.C << ' ' << info.J << ' ' << info.H << '\n';
    for (std::size_t k = 0; k < info.observations.size(); ++k) out << (k ? " " : "") << info.observations[k];
    out << '\n';
    detail::finish(out, path);
}

// --- arrivals -------------------------------------------------------------

[[nodiscard]] inline std::vector<ArrivalEntry> read_arrivals(const std::string& path, const Info& info) {
    std::vector<ArrivalEntry> out;
    for (const auto& l : detail::read_lines(path)) {
        if (l.tokens.size() != 7)
            throw DataError(detail::where(path, l.number) + "expected 7 values: t g r c j count holiday_flag");
        auto v = [&](int k, const char* what) { return detail::to_int(l.tokens[k], path, l.number, what); };
        ArrivalEntry e;
        const auto flag = v(6, "holiday flag");
        if (flag != 0 && flag != 1) throw DataError(detail::where(path, l.number) + "holiday flag must be 0 or 1");
        e.holiday = flag == 1;
        e.t = detail::in_range(v(0, "t"), info.T, path, l.number, "period t");
        e.g = detail::in_range(v(1, "g"), e.holiday ? info.H : info.G, path, l.number, e.holiday ? "holiday g" : "day g");
        e.r = detail::in_range(v(2, "r"), info.R, path, l.number, "zone r");
        e.c = detail::in_range(v(3, "c"), info.C, path, l.number, "type c");
        e.j = detail::in_range(v(4, "j"), info.observations[static_cast<std::size_t>(e.day(info))], path, l.number,
                               "sample j");
        e.count = v(5, "count");
        if (e.count < 0) throw DataError(detail::where(path, l.number) + "arrival count must be non-negative");
        out.push_back(e);
    }
    return out;
}

inline void write_arrivals(const std::vector<ArrivalEntry>& entries, const std::string& path) {
    auto out = detail::open_out(path);
    for (const auto& e : entries)
        out << e.t << ' ' << e.g << ' ' << e.r << ' ' << e.c << ' ' << e.j << ' ' << e.count << ' '
            << (e.holiday ? 1 : 0) << '\n';
    detail::finish(out, path);
}

// --- neighbors ------------------------------------------------------------

// Zones come back sorted by id; ids must be exactly 0..R-1.
[[nodiscard]] inline std::vector<Zone> read_neighbors(const std::string& path, const Info& info) {
    const auto R = info.R;
    const auto J = static_cast<std::size_t>(info.J);
    std::vector<std::optional<Zone>> zones(static_cast<std::size_t>(R));
    for (const auto& l : detail::read_lines(path)) {
        if (l.tokens.size() < 4 + J || (l.tokens.size() - 4 - J) % 2 != 0)
            throw DataError(detail::where(path, l.number) + "expected id lat lon type, " + std::to_string(J) +
                            " covariates and (neighbor distance) pairs");
        Zone z;
        z.id = detail::in_range(detail::to_int(l.tokens[0], path, l.number, "zone id"), R, path, l.number, "zone id");
        z.lat = detail::to_double(l.tokens[1], path, l.number, "lat");
        z.lon = detail::to_double(l.tokens[2], path, l.number, "lon");
        z.type = detail::to_int(l.tokens[3], path, l.number, "type");
        for (std::size_t j = 0; j < J; ++j) z.covariates.push_back(detail::to_double(l.tokens[4 + j], path, l.number, "covariate"));
        for (std::size_t k = 4 + J; k < l.tokens.size(); k += 2) {
            const auto n = detail::in_range(detail::to_int(l.tokens[k], path, l.number, "neighbor"), R, path, l.number, "neighbor");
            if (n == z.id) throw DataError(detail::where(path, l.number) + "zone lists itself as a neighbor");
            const double d = detail::to_double(l.tokens[k + 1], path, l.number, "distance");
            if (!(d >= 0.0)) throw DataError(detail::where(path, l.number) + "distance must be non-negative");
            z.neighbors.emplace_back(n, d);
        }
        auto& slot = zones[static_cast<std::size_t>(z.id)];
        if (slot) throw DataError(detail::where(path, l.number) + "zone " + std::to_string(z.id) + " listed twice");
        slot = std::move(z);
    }
    std::vector<Zone> out;
    for (std::size_t i = 0; i < zones.size(); ++i) {
        if (!zones[i]) throw DataError(path + ": zone " + std::to_string(i) + " missing");
        out.push_back(std::move(*zones[i]));
    }
    return out;
}

inline void write_neighbors(const std::vector<Zone>& zones, const std::string& path) {
    auto out = detail::open_out(path);
    for (const auto& z : zones) {
        out << z.id << ' ' << format_double(z.lat) << ' ' << format_double(z.lon) << ' ' << z.type;
        for (double x : z.covariates) out << ' ' << format_double(x);
        for (const auto& [n, d] : z.neighbors) out << ' ' << n << ' ' << format_double(d);
        out << '\n';
    }
    detail::finish(out, path);
}

// --- alpha ----------------------------------------------------------------

[[nodiscard]] inline Array read_alpha(const std::string& path, std::int64_t R) {
    const auto lines = detail::read_lines(path);
    if (static_cast<std::int64_t>(lines.size()) != R)
        throw DataError(path + ": expected " + std::to_string(R) + " rows, found " + std::to_string(lines.size()));
    const auto n = static_cast<std::size_t>(R);
    Array a({n, n}, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        const auto& l = lines[i];
        if (l.tokens.size() != n)
            throw DataError(detail::where(path, l.number) + "expected " + std::to_string(n) + " values, found " +
                            std::to_string(l.tokens.size()));
        for (std::size_t j = 0; j < n; ++j) {
            a(i, j) = detail::to_double(l.tokens[j], path, l.number, "alpha");
            if (!(a(i, j) >= 0.0)) throw DataError(detail::where(path, l.number) + "alpha entries must be non-negative");
        }
    }
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < i; ++j)
            if (a(i, j) != a(j, i))
                throw DataError(detail::where(path, lines[i].number) + "alpha is not symmetric at (" + std::to_string(i) +
                                "," + std::to_string(j) + ")");
    return a;
}

inline void write_alpha(const Array& a, const std::string& path) {
    auto out = detail::open_out(path);
    const std::size_t n = a.dim(0);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) out << (j ? " " : "") << format_double(a(i, j));
        out << '\n';
    }
    detail::finish(out, path);
}

// --- time groups ----------------------------------------------------------

[[nodiscard]] inline TimeGroups read_time_groups(const std::string& path, std::int64_t periods, bool read_weights) {
    detail::Tokens tok(path);
    TimeGroups g;
    g.count = tok.next_int("number of time groups");
    if (g.count <= 0) throw DataError(detail::where(path, tok.line()) + "number of time groups must be positive");
    for (std::int64_t k = 0; k < periods; ++k) {
        const auto l = tok.line();
        g.index.push_back(detail::in_range(tok.next_int("group index"), g.count, path, l, "group index"));
    }
    if (read_weights) {
        for (std::int64_t k = 0; k < g.count; ++k) {
            const auto l = tok.line();
            const double w = tok.next_double("group weight");
            if (!(w >= 0.0)) throw DataError(detail::where(path, l) + "group weights must be non-negative");
            g.weights.push_back(w);
        }
        if (!tok.done()) throw DataError(detail::where(path, tok.line()) + "unexpected trailing values");
    }
    return g;
}

inline void write_time_groups(const TimeGroups& g, const std::string& path) {
    auto out = detail::open_out(path);
    out << g.count << '\n';
    for (auto i : g.index) out << i << '\n';
    for (double w : g.weights) out << format_double(w) << '\n';
    detail::finish(out, path);
}

// --- cv weights -----------------------------------------------------------

[[nodiscard]] inline std::vector<double> read_cv_weights(const std::string& path) {
    detail::Tokens tok(path);
    std::vector<double> w;
    while (!tok.done()) {
        const auto l = tok.line();
        const double v = tok.next_double("weight");
        if (!(v >= 0.0)) throw DataError(detail::where(path, l) + "Each weight must be non-negative");
        w.push_back(v);
    }
    if (w.empty()) throw DataError(path + ": no cross validation weights");
    return w;
}

inline void write_cv_weights(const std::vector<double>& w, const std::string& path) {
    auto out = detail::open_out(path);
    for (std::size_t k = 0; k < w.size(); ++k) out << (k ? " " : "") << format_double(w[k]);
    out << '\n';
    detail::finish(out, path);
}

// --- output ---------------------------------------------------------------

// One line per entry: the indices of the entry, then the value at 17 digits.
// Lambda (C,R,D*T) gives `c r t value`; beta (C,D,T,J) gives `c d t j value`.
inline void write_output(const Array& x, const std::string& path) {
    auto out = detail::open_out(path);
    const auto& shape = x.shape();
    std::vector<std::size_t> idx(shape.size(), 0);
    for (std::size_t k = 0; k < x.size(); ++k) {
        for (std::size_t a = 0; a < idx.size(); ++a) out << idx[a] << ' ';
        out << format_value17(x[k]) << '\n';
        for (std::size_t a = idx.size(); a-- > 0;) {
            if (++idx[a] < shape[a]) break;
            idx[a] = 0;
        }
    }
    detail::finish(out, path);
}

// Reads an output file of the given rank; the shape is one past the largest
// index on each axis and every entry must appear exactly once.
[[nodiscard]] inline Array read_output(const std::string& path, std::size_t rank) {
    const auto lines = detail::read_lines(path);
    std::vector<std::size_t> shape(rank, 0);
    std::vector<std::pair<std::vector<std::size_t>, double>> rows;
    for (const auto& l : lines) {
        if (l.tokens.size() != rank + 1)
            throw DataError(detail::where(path, l.number) + "expected " + std::to_string(rank) + " indices and a value");
        std::vector<std::size_t> idx(rank);
        for (std::size_t a = 0; a < rank; ++a) {
            const auto v = detail::to_int(l.tokens[a], path, l.number, "index");
            if (v < 0) throw DataError(detail::where(path, l.number) + "negative index");
            idx[a] = static_cast<std::size_t>(v);
            shape[a] = std::max(shape[a], idx[a] + 1);
        }
        rows.emplace_back(std::move(idx), detail::to_double(l.tokens[rank], path, l.number, "value"));
    }
    Array x(shape, 0.0);
    NdArray<char> seen(shape, 0);
    for (const auto& [idx, v] : rows) {
        std::size_t off = 0;
        for (std::size_t a = 0; a < rank; ++a) off = off * shape[a] + idx[a];
        if (seen[off]) throw DataError(path + ": duplicate entry");
        seen[off] = 1;
        x[off] = v;
    }
    if (x.size() != rows.size()) throw DataError(path + ": missing entries");
    return x;
}

// --- bundle ---------------------------------------------------------------

[[nodiscard]] inline CalibrationBundle read_calibration_inputs(const InputPaths& paths, ModelType model, Method method) {
    auto need = [](const std::string& p, const char* option) {
        if (p.empty()) throw Error(std::string("missing required option ") + option);
    };
    need(paths.info, "info_file");
    need(paths.arrivals, "arrivals_file");
    need(paths.neighbors, "neighbors_file");
    if (model == ModelType::no_reg) {
        need(paths.alpha, "alpha_regions_file");
        need(paths.time_groups, "time_groups_file");
    }
    if (method == Method::cross_validation) need(paths.cv_weights, "cv_weights_file");

    CalibrationBundle b;
    b.info = read_info(paths.info);
    b.arrivals = read_arrivals(paths.arrivals, b.info);
    b.zones = read_neighbors(paths.neighbors, b.info);
    if (model == ModelType::no_reg) {
        b.alpha = read_alpha(paths.alpha, b.info.R);
        b.groups = read_time_groups(paths.time_groups, b.info.D() * b.info.T, method != Method::cross_validation);
    }
    if (method == Method::cross_validation) b.cv_weights = read_cv_weights(paths.cv_weights);
    return b;
}

} // namespace laspated::io
