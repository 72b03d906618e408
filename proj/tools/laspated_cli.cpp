// laspated: calibration app (default) and the `discretize` pipeline.
//
//   laspated -f config [--option=value ...]
//   laspated calibrate -f config [--option=value ...]
//   laspated discretize --events calls.csv --border rectangle --space rect 10 10 ...

#include <laspated/laspated.hpp>

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

namespace {

using namespace laspated;

constexpr int exit_ok = 0;
constexpr int exit_usage = 1;
constexpr int exit_data = 2;
constexpr int exit_numerical = 3;

struct UsageError : Error {
    using Error::Error;
};

// `key=value` lines, `#` starts a comment. Returns `--key=value` arguments.
std::vector<std::string> read_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw UsageError("cannot open config file '" + path + "'");
    std::vector<std::string> args;
    std::string line;
    for (std::size_t n = 1; std::getline(in, line); ++n) {
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        const auto body = std::string(time::detail::trim(line));
        if (body.empty()) continue;
        const auto eq = body.find('=');
        if (eq == std::string::npos || eq == 0)
            throw UsageError(path + ":" + std::to_string(n) + ": expected key=value");
        const auto key = std::string(time::detail::trim(std::string_view(body).substr(0, eq)));
        const auto value = std::string(time::detail::trim(std::string_view(body).substr(eq + 1)));
        args.push_back("--" + key + "=" + value);
    }
    return args;
}

struct CalibrateOptions {
    Param param;
    std::string output_file;
    std::string model_type = "no_reg";
    std::string method = "calibration";
    std::string algorithm = "feasible";
    io::InputPaths paths;
    double duration = 1.0;
};

void add_calibrate_options(CLI::App& app, CalibrateOptions& o) {
    auto& p = o.param;
    app.add_option("--EPS", p.EPS, "tolerance in comparisons and in the projection; intensity floor")->capture_default_str();
    app.add_option("--sigma", p.sigma, "Armijo slope fraction")->capture_default_str();
    app.add_option("--accuracy", p.accuracy, "stopping gap")->capture_default_str();
    app.add_option("--max_iter", p.max_iter, "maximum iterations")->capture_default_str();
    app.add_option("--lower_lambda", p.lower_lambda, "lower bound of the variables")->capture_default_str();
    app.add_option("--upper_lambda", p.upper_lambda, "upper bound of the variables")->capture_default_str();
    app.add_option("--beta_bar", p.beta_bar, "initial step of the projected gradient")->capture_default_str();
    app.add_option("--cv_proportion", p.cv_proportion, "fraction of samples in each estimation block")->capture_default_str();
    app.add_option("--output_file", o.output_file, "where to write the estimates");
    app.add_option("--model_type", o.model_type, "reg (covariates) or no_reg (regularized)")
        ->check(CLI::IsMember({"reg", "no_reg"}))
        ->capture_default_str();
    app.add_option("--method", o.method, "calibration or cross_validation")
        ->check(CLI::IsMember({"calibration", "cross_validation"}))
        ->capture_default_str();
    app.add_option("--algorithm", o.algorithm, "feasible (boundary is not supported)")
        ->check(CLI::IsMember({"feasible", "boundary"}))
        ->capture_default_str();
    app.add_option("--info_file", o.paths.info);
    app.add_option("--arrivals_file", o.paths.arrivals);
    app.add_option("--neighbors_file", o.paths.neighbors);
    app.add_option("--alpha_regions_file", o.paths.alpha);
    app.add_option("--time_groups_file", o.paths.time_groups);
    app.add_option("--cv_weights_file", o.paths.cv_weights);
    app.add_option("--duration", o.duration, "duration of each period, hours")->capture_default_str();
}

int run_calibrate(const CalibrateOptions& o) {
    if (o.algorithm == "boundary") throw UsageError("algorithm=boundary: unsupported variant");
    const auto model = io::parse_model_type(o.model_type);
    const auto method = io::parse_method(o.method);
    if (model == io::ModelType::reg && method != io::Method::calibration)
        throw UsageError("model_type=reg: only \"calibration\" is supported");
    if (o.output_file.empty()) throw UsageError("missing required option output_file");
    try {
        o.param.validate();
    } catch (const DataError& e) {
        throw UsageError(e.what());
    }
    const auto bundle = io::read_calibration_inputs(o.paths, model, method);
    const auto run = run_calibration(bundle, model, method, o.param, o.duration);
    io::write_output(run.x, o.output_file);
    std::printf("iterations %d\n", run.iterations);
    std::printf("objective %.17g\n", run.f);
    std::printf("gap %.17g\n", run.gap);
    std::printf("status %s\n", to_string(run.status));
    if (run.selected_weight) std::printf("selected_weight %.17g\n", *run.selected_weight);
    std::printf("wall_time %.3f s\n", run.wall_seconds);
    return exit_ok;
}

struct DiscretizeOptions {
    std::string events;
    std::string border = "rectangle";
    std::vector<std::string> space{"rect", "10", "10"};
    std::vector<std::string> time_specs;
    std::vector<std::string> features;
    std::string datetime_col = "date_time", lat_col = "lat", lon_col = "long", datetime_format;
    std::vector<std::string> geo_variables;
    std::string out_arrivals, out_regions, out_info, out_geojson, out_legend;
    bool include_zeros = false;
};

void add_discretize_options(CLI::App& app, DiscretizeOptions& o) {
    app.add_option("--events", o.events, "events CSV (';' or ',' separated)")->required();
    app.add_option("--border", o.border, "rectangle, convex, or a GeoJSON path")->capture_default_str();
    app.add_option("--space", o.space, "rect NX NY | hex SCALE | custom PATH | voronoi PATH")->expected(2, 3);
    app.add_option("--time", o.time_specs, "U:width:period, U:d1,d2,..:period or custom:PATH (repeatable)");
    app.add_option("--features", o.features, "feature columns");
    app.add_option("--datetime-col", o.datetime_col)->capture_default_str();
    app.add_option("--lat-col", o.lat_col)->capture_default_str();
    app.add_option("--lon-col", o.lon_col)->capture_default_str();
    app.add_option("--datetime-format", o.datetime_format, "strptime format of the timestamps");
    app.add_option("--geo-variable", o.geo_variables, "feature:PATH:PROPERTY or area:PATH:CLASS_PROPERTY (repeatable)");
    app.add_option("--out-arrivals", o.out_arrivals);
    app.add_option("--out-regions", o.out_regions);
    app.add_option("--out-info", o.out_info);
    app.add_option("--out-geojson", o.out_geojson);
    app.add_option("--out-legend", o.out_legend);
    app.add_flag("--include-zeros", o.include_zeros, "write zero counts in the arrivals file");
}

std::size_t parse_count(const std::string& s, const char* what) {
    try {
        std::size_t pos = 0;
        const long v = std::stol(s, &pos);
        if (pos == s.size() && v > 0) return static_cast<std::size_t>(v);
    } catch (const std::exception&) {
    }
    throw UsageError(std::string("--space: invalid ") + what + " '" + s + "'");
}

RegionSet make_space(const DiscretizeOptions& o, const Border& border) {
    const auto& s = o.space;
    if (s[0] == "rect") {
        if (s.size() != 3) throw UsageError("--space rect needs NX NY");
        return discretize_rect(border, parse_count(s[1], "NX"), parse_count(s[2], "NY"));
    }
    if (s.size() != 2) throw UsageError("--space " + s[0] + " takes one argument");
    if (s[0] == "hex") return discretize_hex(border, static_cast<int>(parse_count(s[1], "scale")));
    if (s[0] == "custom") {
        std::vector<geo::MultiPolygon> cells;
        for (const auto& f : geojson::read_features(s[1])) cells.push_back(f.shape);
        return discretize_custom(border, cells);
    }
    if (s[0] == "voronoi") {
        std::vector<geo::GeoPoint> seeds;
        for (const auto& f : geojson::read_features(s[1])) seeds.push_back(f.point ? *f.point : geo::centroid(f.shape));
        return discretize_voronoi(border, seeds);
    }
    throw UsageError("--space: unknown scheme '" + s[0] + "'");
}

void add_geo_variable(const std::string& spec, const Border& border, RegionSet& rs) {
    const auto c1 = spec.find(':');
    const auto c2 = spec.rfind(':');
    if (c1 == std::string::npos || c2 == c1) throw UsageError("--geo-variable: expected KIND:PATH:PROPERTY, got '" + spec + "'");
    const auto kind = spec.substr(0, c1), path = spec.substr(c1 + 1, c2 - c1 - 1), prop = spec.substr(c2 + 1);
    const auto features = geojson::read_features(path);
    const auto layer = source_layer(border, features);
    if (kind == "feature") {
        std::vector<double> totals;
        for (auto k : layer.feature_of) totals.push_back(numeric_property(features[k], prop));
        (void)disaggregate_feature(rs, layer.regions, totals, prop, layer.unclipped_area_km2);
    } else if (kind == "area") {
        std::vector<std::string> classes;
        for (auto k : layer.feature_of) classes.push_back(label_property(features[k], prop));
        (void)area_by_class(rs, layer.regions, classes);
    } else {
        throw UsageError("--geo-variable: unknown kind '" + kind + "' (feature or area)");
    }
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write '" + path + "'");
    out << text;
}

int run_discretize(const DiscretizeOptions& o) {
    std::vector<time::TimeDiscretization> discs;
    for (const auto& spec : o.time_specs) {
        try {
            discs.push_back(time::parse_spec(spec));
        } catch (const DataError& e) {
            if (spec.rfind("custom:", 0) == 0) throw;
            throw UsageError(std::string("--time: ") + e.what());
        }
    }
    LoadOptions lo;
    lo.datetime_col = o.datetime_col;
    lo.lat_col = o.lat_col;
    lo.lon_col = o.lon_col;
    lo.feature_cols = o.features;
    if (!o.datetime_format.empty()) lo.datetime_format = o.datetime_format;
    auto table = load_events(o.events, lo);
    if (table.records.empty()) throw DataError(o.events + ": no events");

    const auto pts = table.points();
    const Border border = o.border == "rectangle" ? border_rectangle(pts)
                          : o.border == "convex"  ? border_convex(pts)
                                                  : border_from_features(geojson::read_features(o.border));
    RegionSet rs = make_space(o, border);
    for (const auto& g : o.geo_variables) add_geo_variable(g, border, rs);

    for (auto& d : discs) attach_time(table, std::move(d));
    attach_space(table, rs);
    const auto agg = aggregate(table);
    std::printf("events %zu\n", table.size());
    std::printf("regions %zu\n", rs.size());
    std::printf("aggregated %zu\n", agg.aggregated);
    std::printf("dropped_outside %zu\n", agg.dropped);

    if (!o.out_arrivals.empty()) write_arrivals(agg, o.out_arrivals, {o.include_zeros});
    if (!o.out_info.empty()) write_info(agg, static_cast<std::int64_t>(covariate_names(rs).size()), o.out_info);
    if (!o.out_regions.empty()) write_regions(rs, o.out_regions);
    if (!o.out_geojson.empty()) write_text(o.out_geojson, to_geojson(rs).dump() + "\n");
    if (!o.out_legend.empty()) write_legend(table, o.out_legend);
    return exit_ok;
}

} // namespace

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    const bool discretize = !args.empty() && args[0] == "discretize";
    if (!args.empty() && (args[0] == "discretize" || args[0] == "calibrate")) args.erase(args.begin());

    try {
        if (discretize) {
            CLI::App app{"laspated discretize: events to arrivals/regions files", "laspated discretize"};
            DiscretizeOptions o;
            add_discretize_options(app, o);
            std::reverse(args.begin(), args.end());
            try {
                app.parse(args);
            } catch (const CLI::ParseError& e) {
                return app.exit(e) == 0 ? exit_ok : exit_usage;
            }
            return run_discretize(o);
        }

        CLI::App app{"laspated: calibrate Poisson arrival intensities", "laspated"};
        app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
        CalibrateOptions o;
        std::string config;
        app.add_option("-f,--config", config, "config file with key=value lines");
        add_calibrate_options(app, o);

        // Config values go first so the command line overrides them.
        std::vector<std::string> merged;
        for (std::size_t k = 0; k < args.size(); ++k) {
            if (args[k] == "-f" || args[k] == "--config") {
                if (k + 1 >= args.size()) throw UsageError("-f needs a file name");
                const auto cfg = read_config(args[k + 1]);
                merged.insert(merged.begin(), cfg.begin(), cfg.end());
                ++k;
            } else if (args[k].rfind("--config=", 0) == 0) {
                const auto cfg = read_config(args[k].substr(9));
                merged.insert(merged.begin(), cfg.begin(), cfg.end());
            } else {
                merged.push_back(args[k]);
            }
        }
        std::reverse(merged.begin(), merged.end());
        try {
            app.parse(merged);
        } catch (const CLI::ParseError& e) {
            return app.exit(e) == 0 ? exit_ok : exit_usage;
        }
        return run_calibrate(o);
    } catch (const UsageError& e) {
        std::fprintf(stderr, "laspated: %s\n", e.what());
        return exit_usage;
    } catch (const NumericalError& e) {
        std::fprintf(stderr, "laspated: numerical failure: %s\n", e.what());
        return exit_numerical;
    } catch (const DataError& e) {
        std::fprintf(stderr, "laspated: %s\n", e.what());
        return exit_data;
    } catch (const Error& e) {
        std::fprintf(stderr, "laspated: %s\n", e.what());
        return exit_usage;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "laspated: %s\n", e.what());
        return exit_data;
    }
}
