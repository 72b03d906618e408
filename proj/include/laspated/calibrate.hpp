#pragma once

// Turns a calibration bundle into model problems and runs the app pipeline.

#include "covariates_model.hpp"
#include "cross_validation.hpp"
#include "error.hpp"
#include "io_formats.hpp"
#include "param.hpp"
#include "regularized_model.hpp"
#include "solver.hpp"

#include <chrono>
#include <cstdint>
#include <optional>
#include <cstddef>
#include <string>
#include <vector>

namespace laspated {

namespace detail {

inline std::size_t sz(std::int64_t v) { return static_cast<std::size_t>(v); }

inline void fill_neighbors(const io::CalibrationBundle& b, RegularizedProblem& p) {
    p.distance = Array({p.R, p.R}, 0.0);
    p.neighbors.assign(p.R, {});
    p.type_region.assign(p.R, 0);
    for (const auto& z : b.zones) {
        const auto i = sz(z.id);
        p.type_region[i] = static_cast<int>(z.type);
        for (const auto& [n, d] : z.neighbors) {
            p.neighbors[i].push_back(sz(n));
            p.distance(i, sz(n)) = d;
        }
    }
}

} // namespace detail

// Per-cell sample lists (C,R,D*T): entry j of cell (c,r,d*T+t) is the count of
// sample j on day d, zero when the file has no line for it.
[[nodiscard]] inline SampleLists sample_lists(const io::CalibrationBundle& b) {
    const auto& info = b.info;
    const auto C = detail::sz(info.C), R = detail::sz(info.R), T = detail::sz(info.T), D = detail::sz(info.D());
    SampleLists s({C, R, D * T});
    for (std::size_t c = 0; c < C; ++c)
        for (std::size_t r = 0; r < R; ++r)
            for (std::size_t d = 0; d < D; ++d)
                for (std::size_t t = 0; t < T; ++t) s(c, r, d * T + t).assign(detail::sz(info.observations[d]), 0.0);
    for (const auto& e : b.arrivals) {
        const auto d = detail::sz(e.day(info));
        s(detail::sz(e.c), detail::sz(e.r), d * T + detail::sz(e.t))[detail::sz(e.j)] += static_cast<double>(e.count);
    }
    return s;
}

[[nodiscard]] inline RegularizedProblem regularized_problem(const io::CalibrationBundle& b, double duration) {
    const auto& info = b.info;
    RegularizedProblem p;
    p.C = detail::sz(info.C);
    p.R = detail::sz(info.R);
    p.T = detail::sz(info.D() * info.T);
    const auto totals = sample_totals(sample_lists(b));
    p.N = totals.N;
    p.M = totals.M;
    p.durations.assign(p.T, duration);
    p.groups.assign(detail::sz(b.groups.count), {});
    for (std::size_t t = 0; t < b.groups.index.size(); ++t) {
        p.which_group.push_back(detail::sz(b.groups.index[t]));
        p.groups[p.which_group.back()].push_back(t);
    }
    p.group_weights = b.groups.weights;
    if (p.group_weights.empty()) p.group_weights.assign(p.groups.size(), 0.0);
    detail::fill_neighbors(b, p);
    p.alpha = b.alpha.size() ? b.alpha : Array({p.R, p.R}, 0.0);
    p.validate();
    return p;
}

[[nodiscard]] inline CovariatesProblem covariates_problem(const io::CalibrationBundle& b, double duration) {
    const auto& info = b.info;
    CovariatesProblem p;
    p.C = detail::sz(info.C);
    p.D = detail::sz(info.D());
    p.T = detail::sz(info.T);
    p.R = detail::sz(info.R);
    p.J = detail::sz(info.J);
    if (p.J == 0) throw DataError("the covariates model needs J >= 1");
    p.N = Array({p.C, p.D, p.T, p.R}, 0.0);
    p.M = Array({p.C, p.D, p.T, p.R}, 0.0);
    for (std::size_t c = 0; c < p.C; ++c)
        for (std::size_t d = 0; d < p.D; ++d)
            for (std::size_t t = 0; t < p.T; ++t)
                for (std::size_t r = 0; r < p.R; ++r) p.N(c, d, t, r) = static_cast<double>(info.observations[d]);
    for (const auto& e : b.arrivals)
        p.M(detail::sz(e.c), detail::sz(e.day(info)), detail::sz(e.t), detail::sz(e.r)) += static_cast<double>(e.count);
    p.x = Array({p.J, p.R}, 0.0);
    for (const auto& z : b.zones)
        for (std::size_t j = 0; j < p.J; ++j) p.x(j, detail::sz(z.id)) = z.covariates[j];
    p.durations.assign(p.T, duration);
    p.validate();
    return p;
}

struct CalibrationRun {
    Array x;              // lambda (C,R,D*T) or beta (C,D,T,J)
    int iterations = 0;
    double f = 0.0;
    double gap = 0.0;
    SolverStatus status = SolverStatus::max_iterations;
    double wall_seconds = 0.0;
    std::optional<double> selected_weight;  // cross validation only
};

inline constexpr double initial_value = 0.1;

[[nodiscard]] inline CalibrationRun run_calibration(const io::CalibrationBundle& b, io::ModelType model,
                                                    io::Method method, const Param& param, double duration) {
    if (!(duration > 0.0)) throw DataError("duration must be positive");
    const auto start = std::chrono::steady_clock::now();
    CalibrationRun out;
    auto take = [&](const SolverResult& r) {
        out.x = r.x;
        out.iterations = r.iterations;
        out.f = r.f;
        out.gap = r.gap;
        out.status = r.status;
    };
    if (model == io::ModelType::reg) {
        if (method != io::Method::calibration)
            throw Error("only \"calibration\" is supported for model_type=reg");
        const CovariatesModel m(covariates_problem(b, duration), param);
        take(projected_gradient_armijo_feasible(m, param, Array(m.shape(), initial_value)));
    } else if (method == io::Method::calibration) {
        const RegularizedModel m(regularized_problem(b, duration), param);
        take(projected_gradient_armijo_feasible(m, param, Array(m.shape(), initial_value)));
    } else {
        const auto cv = cross_validation(param, regularized_problem(b, duration), sample_lists(b), b.cv_weights);
        take(cv.final_fit);
        out.selected_weight = cv.weight;
    }
    out.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return out;
}

} // namespace laspated
