#pragma once

// Timestamp -> time-index maps: uniform periodic windows, periodic windows of
// different durations, and user-given calendar intervals. Timestamps are naive
// local times held as seconds on the system clock; no timezone arithmetic.

#include "error.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cstdint>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace laspated::time {

using Timestamp = std::chrono::sys_seconds;
using Date = std::chrono::year_month_day;

enum class Unit { year, month, week, day, hour, minute, second };

[[nodiscard]] inline Unit parse_unit(std::string_view s) {
    if (s == "Y") return Unit::year;
    if (s == "M") return Unit::month;
    if (s == "W") return Unit::week;
    if (s == "D") return Unit::day;
    if (s == "H") return Unit::hour;
    if (s == "m") return Unit::minute;
    if (s == "S") return Unit::second;
    throw DataError("unknown time unit '" + std::string(s) + "' (expected one of Y M W D H m S)");
}

[[nodiscard]] inline char unit_code(Unit u) {
    constexpr char codes[] = {'Y', 'M', 'W', 'D', 'H', 'm', 'S'};
    return codes[static_cast<int>(u)];
}

// Phase origin of periodic schemes: weeks start on Monday, month and year
// cycles start in January of the earliest event's year.
struct Anchor {
    int anchor_year = 1970;

    [[nodiscard]] static Anchor from_earliest(Timestamp earliest) {
        const Date d{std::chrono::floor<std::chrono::days>(earliest)};
        return {static_cast<int>(d.year())};
    }

    // Monday of the week that contains January 1 of the anchor year.
    [[nodiscard]] std::chrono::sys_days monday() const {
        using namespace std::chrono;
        const sys_days jan1{year{anchor_year} / January / 1};
        return jan1 - (weekday{jan1} - Monday);
    }
};

struct UniformPeriodic {
    Unit unit = Unit::day;
    std::int64_t width = 1;
    std::int64_t period = 1;

    UniformPeriodic() = default;
    UniformPeriodic(Unit u, std::int64_t w, std::int64_t p) : unit(u), width(w), period(p) {
        if (width < 1) throw DataError("time window width must be >= 1");
        if (period < width || period % width != 0) throw DataError("period must be a multiple of the window width");
    }
    [[nodiscard]] std::int64_t index_range() const noexcept { return period / width; }
};

struct NonUniformPeriodic {
    Unit unit = Unit::month;
    std::vector<std::int64_t> durations;
    std::int64_t period = 1;

    NonUniformPeriodic() = default;
    NonUniformPeriodic(Unit u, std::vector<std::int64_t> d, std::int64_t p) : unit(u), durations(std::move(d)), period(p) {
        if (durations.empty()) throw DataError("window duration list is empty");
        for (auto v : durations)
            if (v < 1) throw DataError("window durations must be positive");
        const auto s = cycle();
        if (period < s || period % s != 0) throw DataError("period must be a multiple of the sum of durations");
    }
    [[nodiscard]] std::int64_t cycle() const { return std::accumulate(durations.begin(), durations.end(), std::int64_t{0}); }
    [[nodiscard]] std::int64_t index_range() const {
        return (period / cycle()) * static_cast<std::int64_t>(durations.size());
    }
};

enum class Repetition { none, yearly };

struct CustomInterval {
    Date start;
    Date end;
    std::int64_t t = 1;
    Repetition repetition = Repetition::none;
};

namespace detail {

inline auto month_day(const Date& d) { return std::pair{static_cast<unsigned>(d.month()), static_cast<unsigned>(d.day())}; }

inline bool matches(const CustomInterval& row, const Date& d) {
    if (row.repetition == Repetition::yearly) {
        const auto md = month_day(d);
        return month_day(row.start) <= md && md <= month_day(row.end);
    }
    return row.start <= d && d <= row.end;
}

inline bool overlap(const CustomInterval& a, const CustomInterval& b) {
    using std::chrono::sys_days;
    if (a.repetition == Repetition::none && b.repetition == Repetition::none) return a.start <= b.end && b.start <= a.end;
    if (a.repetition == Repetition::yearly && b.repetition == Repetition::yearly)
        return month_day(a.start) <= month_day(b.end) && month_day(b.start) <= month_day(a.end);
    const auto& fixed = a.repetition == Repetition::none ? a : b;
    const auto& yearly = a.repetition == Repetition::none ? b : a;
    for (sys_days d = sys_days{fixed.start}; d <= sys_days{fixed.end}; d += std::chrono::days{1})
        if (matches(yearly, Date{d})) return true;
    return false;
}

} // namespace detail

// Day-granular intervals, both endpoints inclusive. Unmatched instants get index 0.
class CustomIntervals {
public:
    CustomIntervals() = default;
    explicit CustomIntervals(std::vector<CustomInterval> rows) : rows_(std::move(rows)) {
        for (std::size_t i = 0; i < rows_.size(); ++i) {
            const auto& r = rows_[i];
            if (!r.start.ok() || !r.end.ok()) throw DataError("custom interval row " + std::to_string(i) + ": invalid date");
            if (r.end < r.start) throw DataError("custom interval row " + std::to_string(i) + ": end before start");
            if (r.t < 1) throw DataError("custom interval row " + std::to_string(i) + ": t must be >= 1");
            if (r.repetition == Repetition::yearly && r.start.year() != r.end.year())
                throw DataError("custom interval row " + std::to_string(i) + ": yearly interval must begin and end the same year");
        }
        for (std::size_t i = 0; i < rows_.size(); ++i)
            for (std::size_t j = i + 1; j < rows_.size(); ++j)
                if (rows_[i].t != rows_[j].t && detail::overlap(rows_[i], rows_[j]))
                    throw DataError("custom interval rows " + std::to_string(i) + " and " + std::to_string(j) +
                                    " overlap with different indices");
    }

    [[nodiscard]] const std::vector<CustomInterval>& rows() const noexcept { return rows_; }

    [[nodiscard]] std::int64_t index_of(Timestamp ts) const {
        const Date d{std::chrono::floor<std::chrono::days>(ts)};
        for (const auto& r : rows_)
            if (detail::matches(r, d)) return r.t;
        return 0;
    }

    [[nodiscard]] std::int64_t index_range() const {
        std::int64_t m = 0;
        for (const auto& r : rows_) m = std::max(m, r.t);
        return m + 1;
    }

private:
    std::vector<CustomInterval> rows_;
};

using TimeDiscretization = std::variant<UniformPeriodic, NonUniformPeriodic, CustomIntervals>;

namespace detail {

inline std::int64_t floor_div(std::int64_t a, std::int64_t b) {
    std::int64_t q = a / b;
    if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
    return q;
}

inline std::int64_t floor_mod(std::int64_t a, std::int64_t b) { return a - floor_div(a, b) * b; }

inline std::int64_t unit_seconds(Unit u) {
    switch (u) {
        case Unit::week: return 7 * 86400;
        case Unit::day: return 86400;
        case Unit::hour: return 3600;
        case Unit::minute: return 60;
        case Unit::second: return 1;
        default: return 0;
    }
}

// Whole units elapsed since the anchor origin for the unit.
inline std::int64_t elapsed(Unit u, Timestamp ts, const Anchor& a) {
    using namespace std::chrono;
    if (u == Unit::year || u == Unit::month) {
        const Date d{floor<days>(ts)};
        const std::int64_t years = static_cast<int>(d.year()) - a.anchor_year;
        if (u == Unit::year) return years;
        return years * 12 + static_cast<unsigned>(d.month()) - 1;
    }
    const std::int64_t secs = (ts - time_point_cast<seconds>(a.monday())).count();
    return floor_div(secs, unit_seconds(u));
}

// Start of the `e`-th unit after the anchor origin.
inline Timestamp unit_start(Unit u, std::int64_t e, const Anchor& a) {
    using namespace std::chrono;
    if (u == Unit::year || u == Unit::month) {
        const std::int64_t months = u == Unit::year ? e * 12 : e;
        const auto y = a.anchor_year + static_cast<int>(floor_div(months, 12));
        const auto m = static_cast<unsigned>(floor_mod(months, 12)) + 1;
        return time_point_cast<seconds>(sys_days{year{y} / month{m} / 1});
    }
    return time_point_cast<seconds>(a.monday()) + seconds{e * unit_seconds(u)};
}

} // namespace detail

[[nodiscard]] inline std::int64_t time_index(const UniformPeriodic& d, Timestamp ts, const Anchor& a) {
    const auto e = detail::elapsed(d.unit, ts, a);
    return detail::floor_mod(e, d.period) / d.width;
}

[[nodiscard]] inline std::int64_t time_index(const NonUniformPeriodic& d, Timestamp ts, const Anchor& a) {
    const auto c = detail::floor_mod(detail::elapsed(d.unit, ts, a), d.period);
    const auto s = d.cycle();
    const auto slot = (c / s) * static_cast<std::int64_t>(d.durations.size());
    const auto r = c % s;
    std::int64_t acc = 0;
    for (std::size_t b = 0; b < d.durations.size(); ++b) {
        acc += d.durations[b];
        if (r < acc) return slot + static_cast<std::int64_t>(b);
    }
    return slot + static_cast<std::int64_t>(d.durations.size()) - 1;  // unreachable
}

[[nodiscard]] inline std::int64_t time_index(const CustomIntervals& d, Timestamp ts, const Anchor&) { return d.index_of(ts); }

[[nodiscard]] inline std::int64_t time_index(const TimeDiscretization& d, Timestamp ts, const Anchor& a) {
    return std::visit([&](const auto& s) { return time_index(s, ts, a); }, d);
}

[[nodiscard]] inline std::int64_t index_range(const TimeDiscretization& d) {
    return std::visit([](const auto& s) { return s.index_range(); }, d);
}

// Earliest instant after `ts` at which the index may change.
[[nodiscard]] inline Timestamp next_boundary(const TimeDiscretization& d, Timestamp ts, const Anchor& a) {
    using namespace std::chrono;
    if (const auto* u = std::get_if<UniformPeriodic>(&d)) {
        const auto e = detail::elapsed(u->unit, ts, a);
        return detail::unit_start(u->unit, (detail::floor_div(e, u->width) + 1) * u->width, a);
    }
    if (const auto* n = std::get_if<NonUniformPeriodic>(&d)) {
        return detail::unit_start(n->unit, detail::elapsed(n->unit, ts, a) + 1, a);
    }
    return time_point_cast<seconds>(floor<days>(ts) + days{1});
}

// --- parsing --------------------------------------------------------------

namespace detail {

inline bool take_int(std::string_view& s, std::size_t max_digits, int& out) {
    std::size_t n = 0;
    while (n < s.size() && n < max_digits && s[n] >= '0' && s[n] <= '9') ++n;
    if (n == 0) return false;
    std::from_chars(s.data(), s.data() + n, out);
    s.remove_prefix(n);
    return true;
}

inline bool take_char(std::string_view& s, char c) {
    if (s.empty() || s.front() != c) return false;
    s.remove_prefix(1);
    return true;
}

inline std::optional<Timestamp> make_timestamp(int y, int mo, int d, int h, int mi, int sec) {
    using namespace std::chrono;
    const Date date{year{y}, month{static_cast<unsigned>(mo)}, day{static_cast<unsigned>(d)}};
    if (!date.ok() || h < 0 || h > 23 || mi < 0 || mi > 59 || sec < 0 || sec > 60) return std::nullopt;
    return time_point_cast<seconds>(sys_days{date}) + hours{h} + minutes{mi} + seconds{sec};
}

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '"' || s.front() == '\r')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '"' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

// Optional " HH:MM[:SS[.fff]]" or "THH:MM..." tail.
inline bool parse_clock(std::string_view& s, int& h, int& mi, int& sec) {
    h = mi = sec = 0;
    if (s.empty()) return true;
    if (!take_char(s, 'T') && !take_char(s, ' ')) return false;
    if (!take_int(s, 2, h) || !take_char(s, ':') || !take_int(s, 2, mi)) return false;
    if (take_char(s, ':')) {
        if (!take_int(s, 2, sec)) return false;
        if (take_char(s, '.'))
            while (!s.empty() && s.front() >= '0' && s.front() <= '9') s.remove_prefix(1);
    }
    take_char(s, 'Z');
    return s.empty();
}

} // namespace detail

// ISO-8601 (YYYY-MM-DD[ T]HH:MM[:SS]) or dd/mm/YYYY [HH:MM[:SS]], auto-detected.
[[nodiscard]] inline std::optional<Timestamp> parse_timestamp(std::string_view text) {
    auto s = detail::trim(text);
    int y = 0, mo = 0, d = 0, h = 0, mi = 0, sec = 0;
    if (s.size() >= 10 && s[4] == '-') {
        if (!detail::take_int(s, 4, y) || !detail::take_char(s, '-') || !detail::take_int(s, 2, mo) ||
            !detail::take_char(s, '-') || !detail::take_int(s, 2, d))
            return std::nullopt;
    } else {
        if (!detail::take_int(s, 2, d) || !detail::take_char(s, '/') || !detail::take_int(s, 2, mo) ||
            !detail::take_char(s, '/') || !detail::take_int(s, 4, y))
            return std::nullopt;
    }
    if (!detail::parse_clock(s, h, mi, sec)) return std::nullopt;
    return detail::make_timestamp(y, mo, d, h, mi, sec);
}

// strptime-style explicit format (e.g. "%d/%m/%Y %H:%M").
[[nodiscard]] inline std::optional<Timestamp> parse_timestamp(std::string_view text, const std::string& format) {
    std::tm tm{};
    std::istringstream in{std::string(detail::trim(text))};
    in >> std::get_time(&tm, format.c_str());
    if (in.fail()) return std::nullopt;
    return detail::make_timestamp(tm.tm_year + 1900, tm.tm_mon + 1, tm.tm_mday, tm.tm_hour, tm.tm_min, tm.tm_sec);
}

[[nodiscard]] inline Date parse_date(std::string_view text) {
    const auto ts = parse_timestamp(text);
    if (!ts) throw DataError("invalid date '" + std::string(text) + "'");
    return Date{std::chrono::floor<std::chrono::days>(*ts)};
}

[[nodiscard]] inline std::string format_date(const Date& d) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(d.year()), static_cast<unsigned>(d.month()),
                  static_cast<unsigned>(d.day()));
    return buf;
}

// CSV with header start,end,t,repetition; repetition is "yearly" or empty/None.
[[nodiscard]] inline CustomIntervals read_custom_intervals(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open custom interval file: " + path);
    std::string line;
    if (!std::getline(in, line)) throw DataError(path + ": missing header");
    std::vector<CustomInterval> rows;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (detail::trim(line).empty()) continue;
        std::vector<std::string> f;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) f.emplace_back(detail::trim(cell));
        if (f.size() == 3) f.emplace_back();
        if (f.size() != 4) throw DataError(path + ":" + std::to_string(lineno) + ": expected 4 fields");
        CustomInterval r;
        try {
            r.start = parse_date(f[0]);
            r.end = parse_date(f[1]);
            r.t = std::stoll(f[2]);
        } catch (const std::exception& e) {
            throw DataError(path + ":" + std::to_string(lineno) + ": " + e.what());
        }
        if (f[3] == "yearly") {
            r.repetition = Repetition::yearly;
        } else if (f[3].empty() || f[3] == "None" || f[3] == "none") {
            r.repetition = Repetition::none;
        } else {
            throw DataError(path + ":" + std::to_string(lineno) + ": unknown repetition '" + f[3] + "'");
        }
        rows.push_back(r);
    }
    return CustomIntervals(std::move(rows));
}

// "U:w:p" (uniform), "U:d1,d2,...:p" (durations), or "custom:<csv path>".
[[nodiscard]] inline TimeDiscretization parse_spec(const std::string& spec) {
    if (spec.rfind("custom:", 0) == 0) return read_custom_intervals(spec.substr(7));
    const auto c1 = spec.find(':');
    const auto c2 = spec.find(':', c1 == std::string::npos ? c1 : c1 + 1);
    if (c1 == std::string::npos || c2 == std::string::npos)
        throw DataError("invalid time spec '" + spec + "' (expected U:width:period, U:d1,d2,..:period or custom:path)");
    const Unit unit = parse_unit(spec.substr(0, c1));
    const std::string mid = spec.substr(c1 + 1, c2 - c1 - 1);
    std::int64_t period = 0;
    std::vector<std::int64_t> widths;
    try {
        period = std::stoll(spec.substr(c2 + 1));
        std::stringstream ss(mid);
        std::string tok;
        while (std::getline(ss, tok, ',')) widths.push_back(std::stoll(tok));
    } catch (const std::exception&) {
        throw DataError("invalid time spec '" + spec + "'");
    }
    if (widths.size() == 1 && mid.find(',') == std::string::npos) return UniformPeriodic(unit, widths[0], period);
    return NonUniformPeriodic(unit, std::move(widths), period);
}

} // namespace laspated::time
