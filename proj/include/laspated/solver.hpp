#pragma once

// Projected gradient with Armijo backtracking along the feasible direction.
//
//   d_k     = P(x_k - beta_bar * grad f(x_k)) - x_k
//   theta_k = 2^-m, m >= 0 the first with
//             f(x_k + theta d_k) <= f(x_k) + sigma * theta * <grad f(x_k), d_k>
//   x_{k+1} = x_k + theta_k d_k
//
// Stops when f(x_k) - lower_bound(x_k) <= accuracy, after max_iter steps, or
// when no descent direction is left. Returns the best iterate seen.

#include "error.hpp"
#include "ndarray.hpp"
#include "param.hpp"

#include <cmath>
#include <concepts>
#include <limits>
#include <vector>

namespace laspated {

template <typename M>
concept CalibrationModel = requires(const M& m, const Array& x) {
    { m.f(x) } -> std::convertible_to<double>;
    { m.gradient(x) } -> std::convertible_to<Array>;
    { m.projection(x) } -> std::convertible_to<Array>;
    { m.is_feasible(x) } -> std::convertible_to<bool>;
    { m.get_rhs(x, x) } -> std::convertible_to<double>;
    { m.get_lower_bound(x, x) } -> std::convertible_to<double>;
    { m.average_rate_difference(x, x) } -> std::convertible_to<double>;
};

enum class SolverStatus {
    converged,          // gap <= accuracy
    max_iterations,
    no_descent,         // <grad, d> >= 0 before the gap closed
    line_search_failed, // no Armijo step with a strict decrease within the backtracking budget
};

[[nodiscard]] inline const char* to_string(SolverStatus s) {
    switch (s) {
        case SolverStatus::converged: return "converged";
        case SolverStatus::max_iterations: return "max_iterations";
        case SolverStatus::no_descent: return "no_descent";
        case SolverStatus::line_search_failed: return "line_search_failed";
    }
    return "unknown";
}

// One accepted step.
struct IterationRecord {
    int iteration = 0;
    double f = 0.0;       // f(x_k)
    double gap = 0.0;     // f(x_k) - lower bound at x_k
    double rhs = 0.0;     // <grad f(x_k), d_k>
    double theta = 0.0;   // accepted step
    double f_next = 0.0;  // f(x_{k+1})
    double best_f = 0.0;  // best value after the step
    bool next_feasible = false;
};

struct SolverOptions {
    bool record_trace = false;
    int max_backtracks = 60;
};

struct SolverResult {
    Array x;                // best iterate
    double f = 0.0;         // f(x)
    double gap = std::numeric_limits<double>::infinity();  // gap at the last examined iterate
    int iterations = 0;     // accepted steps
    SolverStatus status = SolverStatus::max_iterations;
    std::vector<IterationRecord> trace;
};

namespace detail {

inline double finite_or_throw(double v, const char* what) {
    if (!std::isfinite(v)) throw NumericalError(std::string("non-finite ") + what);
    return v;
}

inline const Array& finite_or_throw(const Array& a, const char* what) {
    for (double v : a.flat())
        if (!std::isfinite(v)) throw NumericalError(std::string("non-finite ") + what);
    return a;
}

} // namespace detail

template <CalibrationModel Model>
[[nodiscard]] SolverResult projected_gradient_armijo_feasible(const Model& model, const Param& param, const Array& x0,
                                                              const SolverOptions& options = {}) {
    param.validate();
    SolverResult res;
    Array x = model.projection(x0);
    double fx = detail::finite_or_throw(model.f(x), "objective");
    res.x = x;
    res.f = fx;

    for (int k = 0;; ++k) {
        const Array grad = detail::finite_or_throw(model.gradient(x), "gradient");
        res.gap = fx - model.get_lower_bound(x, grad);
        if (res.gap <= param.accuracy) {
            res.status = SolverStatus::converged;
            break;
        }
        if (k >= param.max_iter) {
            res.status = SolverStatus::max_iterations;
            break;
        }
        const Array trial = model.projection(axpy(x, -param.beta_bar, grad));
        const Array dir = axpy(trial, -1.0, x);
        const double rhs = model.get_rhs(grad, dir);
        if (!(rhs < 0.0)) {
            res.status = SolverStatus::no_descent;
            break;
        }
        double theta = 1.0;
        double f_next = std::numeric_limits<double>::infinity();
        Array next;
        bool accepted = false;
        for (int m = 0; m <= options.max_backtracks; ++m, theta *= 0.5) {
            next = axpy(x, theta, dir);
            f_next = model.f(next);
            // with rhs < 0 the test implies a strict decrease; when rounding
            // hides it the step certifies nothing
            if (std::isfinite(f_next) && f_next <= fx + param.sigma * theta * rhs && f_next < fx) {
                accepted = true;
                break;
            }
        }
        if (!accepted) {
            res.status = SolverStatus::line_search_failed;
            break;
        }
        if (f_next < res.f) {
            res.f = f_next;
            res.x = next;
        }
        if (options.record_trace) {
            res.trace.push_back({k, fx, res.gap, rhs, theta, f_next, res.f, model.is_feasible(next)});
        }
        x = std::move(next);
        fx = f_next;
        ++res.iterations;
    }
    return res;
}

} // namespace laspated
