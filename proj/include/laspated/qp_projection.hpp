#pragma once

// Euclidean projection onto a polyhedron {b : <c_k, b> >= h_k}.
//
// Hildreth's method (cyclic coordinate ascent on the dual): b = y + sum mu_k c_k,
// each constraint in turn updates mu_k >= 0 to its exact dual maximizer. Every
// few sweeps the current support {k : mu_k > 0} is tried as the exact active
// set by solving the equality-constrained projection directly.
//
// Parallel constraints with the same orientation are reduced to the tightest
// one first; otherwise the dual shuffles multiplier mass between them in tiny
// steps (b >= 0 next to x b >= eps with J = 1 is the usual case).

#include "error.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace laspated::qp {

struct HalfSpace {
    std::vector<double> normal;
    double offset = 0.0;  // <normal, b> >= offset
};

struct Projection {
    std::vector<double> point;
    std::vector<double> multipliers;
    double kkt_residual = 0.0;
    int sweeps = 0;
};

namespace detail {

inline double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

} // namespace detail

// Max of primal infeasibility, dual infeasibility, complementarity and
// stationarity violations.
[[nodiscard]] inline double kkt_residual(std::span<const double> y, std::span<const double> b,
                                         const std::vector<HalfSpace>& cons, std::span<const double> mu) {
    double r = 0.0;
    std::vector<double> stat(b.begin(), b.end());
    for (std::size_t j = 0; j < y.size(); ++j) stat[j] -= y[j];
    for (std::size_t k = 0; k < cons.size(); ++k) {
        const double slack = detail::dot(cons[k].normal, b) - cons[k].offset;
        r = std::max({r, -slack, -mu[k], std::abs(mu[k] * slack)});
        for (std::size_t j = 0; j < b.size(); ++j) stat[j] -= mu[k] * cons[k].normal[j];
    }
    for (double s : stat) r = std::max(r, std::abs(s));
    return r;
}

namespace detail {

// Projection onto {<c_k, b> = h_k, k in support}; multipliers outside the support are 0.
inline bool solve_active(std::span<const double> y, const std::vector<HalfSpace>& cons,
                         const std::vector<std::size_t>& support, std::vector<double>& b, std::vector<double>& mu) {
    const auto n = static_cast<Eigen::Index>(y.size());
    const auto m = static_cast<Eigen::Index>(support.size());
    b.assign(y.begin(), y.end());
    mu.assign(cons.size(), 0.0);
    if (m == 0) return true;
    Eigen::MatrixXd C(m, n);
    Eigen::VectorXd rhs(m);
    const Eigen::Map<const Eigen::VectorXd> yv(y.data(), n);
    for (Eigen::Index r = 0; r < m; ++r) {
        const auto& c = cons[support[static_cast<std::size_t>(r)]];
        for (Eigen::Index j = 0; j < n; ++j) C(r, j) = c.normal[static_cast<std::size_t>(j)];
        rhs(r) = c.offset;
    }
    rhs -= C * yv;
    const Eigen::MatrixXd G = C * C.transpose();
    const Eigen::VectorXd nu = G.completeOrthogonalDecomposition().solve(rhs);
    if (!nu.allFinite()) return false;
    const Eigen::VectorXd bv = yv + C.transpose() * nu;
    for (Eigen::Index j = 0; j < n; ++j) b[static_cast<std::size_t>(j)] = bv(j);
    for (Eigen::Index r = 0; r < m; ++r) mu[support[static_cast<std::size_t>(r)]] = nu(r);
    return true;
}

// Marks constraints implied by a parallel, same-direction, tighter one.
inline std::vector<char> redundant_parallel(const std::vector<HalfSpace>& cons, const std::vector<double>& norm2) {
    std::vector<char> drop(cons.size(), 0);
    for (std::size_t a = 0; a < cons.size(); ++a) {
        if (norm2[a] == 0.0) continue;
        for (std::size_t b = a + 1; b < cons.size() && !drop[a]; ++b) {
            if (drop[b] || norm2[b] == 0.0) continue;
            const double c = dot(cons[a].normal, cons[b].normal);
            if (c <= 0.0 || std::abs(c * c - norm2[a] * norm2[b]) > 1e-12 * norm2[a] * norm2[b]) continue;
            const double ha = cons[a].offset / std::sqrt(norm2[a]), hb = cons[b].offset / std::sqrt(norm2[b]);
            (ha >= hb ? drop[b] : drop[a]) = 1;
        }
    }
    return drop;
}

} // namespace detail

[[nodiscard]] inline Projection project(std::span<const double> y, const std::vector<HalfSpace>& cons, double tol,
                                        int max_sweeps = 100000) {
    const std::size_t n = y.size();
    std::vector<double> norm2(cons.size());
    for (std::size_t k = 0; k < cons.size(); ++k) {
        if (cons[k].normal.size() != n) throw DataError("constraint dimension mismatch");
        norm2[k] = detail::dot(cons[k].normal, cons[k].normal);
        if (norm2[k] == 0.0 && cons[k].offset > 0.0)
            throw DataError("infeasible projection: constraint " + std::to_string(k) + " has a zero normal");
    }

    const auto drop = detail::redundant_parallel(cons, norm2);
    Projection out;
    out.point.assign(y.begin(), y.end());
    out.multipliers.assign(cons.size(), 0.0);
    auto& b = out.point;
    auto& mu = out.multipliers;
    std::vector<double> pb, pmu;
    for (int sweep = 0; sweep <= max_sweeps; ++sweep) {
        out.kkt_residual = kkt_residual(y, b, cons, mu);
        out.sweeps = sweep;
        if (out.kkt_residual <= tol) return out;
        if (sweep % 10 == 9) {
            std::vector<std::size_t> support;
            for (std::size_t k = 0; k < cons.size(); ++k)
                if (mu[k] > 0.0) support.push_back(k);
            if (detail::solve_active(y, cons, support, pb, pmu)) {
                const double r = kkt_residual(y, pb, cons, pmu);
                if (r <= tol) {
                    b = pb;
                    mu = pmu;
                    out.kkt_residual = r;
                    return out;
                }
            }
        }
        for (std::size_t k = 0; k < cons.size(); ++k) {
            if (norm2[k] == 0.0 || drop[k]) continue;
            const double viol = cons[k].offset - detail::dot(cons[k].normal, b);
            const double step = std::max(-mu[k], viol / norm2[k]);
            if (step == 0.0) continue;
            mu[k] += step;
            for (std::size_t j = 0; j < n; ++j) b[j] += step * cons[k].normal[j];
        }
    }
    throw NumericalError("QP projection did not reach KKT residual " + std::to_string(tol) + " (residual " +
                         std::to_string(out.kkt_residual) + ")");
}

} // namespace laspated::qp
