#pragma once

// Independent reference computations and seeded instances shared by the unit
// tests and the acceptance binary. Nothing here calls the library's solver or
// projection code.

#include <laspated/cross_validation.hpp>
#include <laspated/covariates_model.hpp>
#include <laspated/ndarray.hpp>
#include <laspated/qp_projection.hpp>
#include <laspated/regularized_model.hpp>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <random>
#include <vector>

namespace oracles {

using laspated::Array;

// Central differences of f at x.
inline Array fd_gradient(const std::function<double(const Array&)>& f, const Array& x, double h = 1e-6) {
    Array g(x.shape(), 0.0);
    Array y = x;
    for (std::size_t k = 0; k < x.size(); ++k) {
        y[k] = x[k] + h;
        const double fp = f(y);
        y[k] = x[k] - h;
        const double fm = f(y);
        y[k] = x[k];
        g[k] = (fp - fm) / (2.0 * h);
    }
    return g;
}

// Largest |a - b| / max(1, |a|).
inline double max_rel_error(const Array& a, const Array& b) {
    double e = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) e = std::max(e, std::abs(a[k] - b[k]) / std::max(1.0, std::abs(a[k])));
    return e;
}

// Gaussian elimination with partial pivoting; nullopt when singular.
inline std::optional<std::vector<double>> solve_linear(std::vector<std::vector<double>> A, std::vector<double> b) {
    const std::size_t n = b.size();
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t piv = col;
        for (std::size_t r = col + 1; r < n; ++r)
            if (std::abs(A[r][col]) > std::abs(A[piv][col])) piv = r;
        if (std::abs(A[piv][col]) < 1e-12) return std::nullopt;
        std::swap(A[piv], A[col]);
        std::swap(b[piv], b[col]);
        for (std::size_t r = col + 1; r < n; ++r) {
            const double m = A[r][col] / A[col][col];
            for (std::size_t c = col; c < n; ++c) A[r][c] -= m * A[col][c];
            b[r] -= m * b[col];
        }
    }
    std::vector<double> x(n);
    for (std::size_t r = n; r-- > 0;) {
        double s = b[r];
        for (std::size_t c = r + 1; c < n; ++c) s -= A[r][c] * x[c];
        x[r] = s / A[r][r];
    }
    return x;
}

// Exact projection of y onto {<c_k,b> >= h_k}: try every active set of size
// at most dim(y), keep the KKT points, return the nearest one.
inline std::optional<std::vector<double>> project_enumerate(const std::vector<double>& y,
                                                           const std::vector<laspated::qp::HalfSpace>& cons) {
    const std::size_t n = y.size(), m = cons.size();
    auto dot = [](const std::vector<double>& a, const std::vector<double>& b) {
        double s = 0.0;
        for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
        return s;
    };
    std::optional<std::vector<double>> best;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t mask = 0; mask < (std::size_t{1} << m); ++mask) {
        std::vector<std::size_t> S;
        for (std::size_t k = 0; k < m; ++k)
            if (mask >> k & 1) S.push_back(k);
        if (S.size() > n) continue;
        std::vector<double> nu(S.size(), 0.0);
        if (!S.empty()) {
            std::vector<std::vector<double>> G(S.size(), std::vector<double>(S.size()));
            std::vector<double> rhs(S.size());
            for (std::size_t a = 0; a < S.size(); ++a) {
                for (std::size_t c = 0; c < S.size(); ++c) G[a][c] = dot(cons[S[a]].normal, cons[S[c]].normal);
                rhs[a] = cons[S[a]].offset - dot(cons[S[a]].normal, y);
            }
            const auto sol = solve_linear(G, rhs);
            if (!sol) continue;
            nu = *sol;
        }
        std::vector<double> b = y;
        for (std::size_t a = 0; a < S.size(); ++a)
            for (std::size_t j = 0; j < n; ++j) b[j] += nu[a] * cons[S[a]].normal[j];
        bool ok = std::all_of(nu.begin(), nu.end(), [](double v) { return v >= -1e-12; });
        for (const auto& c : cons) ok = ok && dot(c.normal, b) >= c.offset - 1e-10;
        if (!ok) continue;
        double d = 0.0;
        for (std::size_t j = 0; j < n; ++j) d += (b[j] - y[j]) * (b[j] - y[j]);
        if (d < best_d) {
            best_d = d;
            best = b;
        }
    }
    return best;
}

// Constraints of one covariates block: b >= 0 and x_{.,i}.b >= floor.
inline std::vector<laspated::qp::HalfSpace> block_constraints(const std::vector<std::vector<double>>& x_by_region,
                                                              std::size_t J, double floor) {
    std::vector<laspated::qp::HalfSpace> cons;
    for (std::size_t j = 0; j < J; ++j) {
        laspated::qp::HalfSpace h{std::vector<double>(J, 0.0), 0.0};
        h.normal[j] = 1.0;
        cons.push_back(h);
    }
    for (const auto& xi : x_by_region) cons.push_back({xi, floor});
    return cons;
}

// f(x) = (x - 2)^2 on [0, 10].
struct Quadratic1D {
    double lo = 0.0, hi = 10.0;
    [[nodiscard]] double f(const Array& x) const { return (x[0] - 2.0) * (x[0] - 2.0); }
    [[nodiscard]] Array gradient(const Array& x) const { return Array({1}, 2.0 * (x[0] - 2.0)); }
    [[nodiscard]] Array projection(const Array& x) const { return Array({1}, std::clamp(x[0], lo, hi)); }
    [[nodiscard]] bool is_feasible(const Array& x) const { return x[0] >= lo && x[0] <= hi; }
    [[nodiscard]] double get_rhs(const Array& g, const Array& d) const { return g[0] * d[0]; }
    [[nodiscard]] double get_lower_bound(const Array& x, const Array& g) const {
        return f(x) + std::min(g[0] * (lo - x[0]), g[0] * (hi - x[0]));
    }
    [[nodiscard]] double average_rate_difference(const Array& a, const Array& b) const { return std::abs(a[0] - b[0]); }
};

// (C,R,T) = (1,4,6), no penalties. Counts are chosen so the curvature
// N^2/M at the optimum stays in [0.6, 1.4].
inline laspated::RegularizedProblem zero_penalty_instance(unsigned seed = 11) {
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<int> n_dist(2, 6);
    std::uniform_real_distribution<double> curv(0.6, 1.4);
    Array N({1, 4, 6}, 0.0), M({1, 4, 6}, 0.0);
    for (std::size_t k = 0; k < N.size(); ++k) {
        N[k] = n_dist(rng);
        M[k] = std::round(N[k] * N[k] / curv(rng));
    }
    return laspated::RegularizedProblem::unpenalized(std::move(N), std::move(M), std::vector<double>(6, 1.0));
}

// Closed-form unpenalized optimum, clamped to the box.
inline Array closed_form_mle(const laspated::RegularizedProblem& p, const laspated::Param& param) {
    Array x(p.N.shape(), param.floor());
    for (std::size_t k = 0; k < x.size(); ++k)
        if (p.N[k] > 0.0) x[k] = std::clamp(p.M[k] / (p.N[k] * p.durations[k % p.T]), param.floor(), param.upper_lambda);
    return x;
}

// C=1, R=3 in a chain, T=4 in one group, rates rising steeply with t.
inline laspated::RegularizedProblem smoothing_instance(unsigned seed = 5) {
    std::mt19937_64 rng(seed);
    Array N({1, 3, 4}, 20.0), M({1, 3, 4}, 0.0);
    for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t t = 0; t < 4; ++t) {
            std::poisson_distribution<int> arrivals(20.0 * (1.0 + 3.0 * static_cast<double>(t) + 0.5 * static_cast<double>(i)));
            M(0, i, t) = arrivals(rng);
        }
    auto p = laspated::RegularizedProblem::unpenalized(std::move(N), std::move(M), std::vector<double>(4, 1.0));
    p.groups = {{0, 1, 2, 3}};
    p.which_group.assign(4, 0);
    p.group_weights = {0.0};
    p.neighbors = {{1}, {0, 2}, {1}};
    return p;
}

// Largest max - min of lambda over a time group, across (c, i, group).
inline double within_group_spread(const laspated::RegularizedProblem& p, const Array& lambda) {
    double s = 0.0;
    for (std::size_t c = 0; c < p.C; ++c)
        for (std::size_t i = 0; i < p.R; ++i)
            for (const auto& G : p.groups) {
                double lo = std::numeric_limits<double>::infinity(), hi = -lo;
                for (std::size_t t : G) {
                    lo = std::min(lo, lambda(c, i, t));
                    hi = std::max(hi, lambda(c, i, t));
                }
                s = std::max(s, hi - lo);
            }
    return s;
}

struct RecoveryInstance {
    laspated::CovariatesProblem problem;
    Array beta_true;  // (C,D,T,J)
};

// lambda = x.beta_true with C=1, D=2, T=4, R=10, J=2 and 500 observation days per cell.
inline RecoveryInstance recovery_instance(unsigned seed = 2024) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> xs(0.5, 2.0), bs(0.5, 3.0);
    RecoveryInstance out;
    auto& p = out.problem;
    p.C = 1, p.D = 2, p.T = 4, p.R = 10, p.J = 2;
    p.x = Array({p.J, p.R}, 0.0);
    for (auto& v : p.x.flat()) v = xs(rng);
    out.beta_true = Array({p.C, p.D, p.T, p.J}, 0.0);
    for (auto& v : out.beta_true.flat()) v = bs(rng);
    p.N = Array({p.C, p.D, p.T, p.R}, 500.0);
    p.M = Array({p.C, p.D, p.T, p.R}, 0.0);
    p.durations.assign(p.T, 1.0);
    for (std::size_t d = 0; d < p.D; ++d)
        for (std::size_t t = 0; t < p.T; ++t)
            for (std::size_t i = 0; i < p.R; ++i) {
                double lam = 0.0;
                for (std::size_t j = 0; j < p.J; ++j) lam += out.beta_true(0, d, t, j) * p.x(j, i);
                std::poisson_distribution<long> arrivals(500.0 * lam);
                p.M(0, d, t, i) = static_cast<double>(arrivals(rng));
            }
    return out;
}

inline double relative_error(const Array& a, const Array& truth) {
    double num = 0.0, den = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) {
        num += (a[k] - truth[k]) * (a[k] - truth[k]);
        den += truth[k] * truth[k];
    }
    return std::sqrt(num / den);
}

struct CvToy {
    laspated::RegularizedProblem structure;  // neighbors and groups; N, M filled with totals
    laspated::SampleLists samples;           // (1,2,2)
};

// Two neighboring regions, two periods in one group, very different rates.
inline CvToy cv_toy(unsigned seed = 99, std::size_t per_cell = 10) {
    std::mt19937_64 rng(seed);
    const double rate[2][2] = {{1.0, 8.0}, {3.0, 15.0}};
    CvToy toy{{}, laspated::SampleLists({1, 2, 2})};
    Array N({1, 2, 2}, 0.0), M({1, 2, 2}, 0.0);
    for (std::size_t i = 0; i < 2; ++i)
        for (std::size_t t = 0; t < 2; ++t) {
            std::poisson_distribution<int> arrivals(rate[i][t]);
            for (std::size_t j = 0; j < per_cell; ++j) toy.samples(0, i, t).push_back(arrivals(rng));
            N(0, i, t) = static_cast<double>(per_cell);
            for (double v : toy.samples(0, i, t)) M(0, i, t) += v;
        }
    auto p = laspated::RegularizedProblem::unpenalized(std::move(N), std::move(M), {1.0, 1.0});
    p.groups = {{0, 1}};
    p.which_group = {0, 0};
    p.group_weights = {0.0};
    p.neighbors = {{1}, {0}};
    toy.structure = p;
    return toy;
}

// Brute-force fold evaluation for candidates {0, w_big}: weight 0 fits each
// cell by its own rate; an unbounded weight forces one pooled rate shared by
// all four cells, which is the limit of the large-weight fit.
inline double brute_force_cv_choice(const CvToy& toy, double cv_proportion, double w_big, const laspated::Param& param) {
    const std::size_t K = std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(1.0 / cv_proportion + 1e-9)));
    double loss[2] = {0.0, 0.0};
    for (std::size_t k = 0; k < K; ++k) {
        double en[2][2] = {}, em[2][2] = {}, vn[2][2] = {}, vm[2][2] = {};
        for (std::size_t i = 0; i < 2; ++i)
            for (std::size_t t = 0; t < 2; ++t) {
                const auto& list = toy.samples(0, i, t);
                for (std::size_t j = 0; j < list.size(); ++j) {
                    const bool est = j % K == k;
                    (est ? en : vn)[i][t] += 1.0;
                    (est ? em : vm)[i][t] += list[j];
                    if (K == 1) {
                        vn[i][t] += 1.0;
                        vm[i][t] += list[j];
                    }
                }
            }
        double pooled_m = 0.0, pooled_n = 0.0;
        for (std::size_t i = 0; i < 2; ++i)
            for (std::size_t t = 0; t < 2; ++t) {
                pooled_m += em[i][t];
                pooled_n += en[i][t];
            }
        const double pooled = std::clamp(pooled_m / pooled_n, param.floor(), param.upper_lambda);
        for (std::size_t i = 0; i < 2; ++i)
            for (std::size_t t = 0; t < 2; ++t) {
                const double own = en[i][t] > 0.0 ? std::clamp(em[i][t] / en[i][t], param.floor(), param.upper_lambda)
                                                   : param.floor();
                loss[0] += vn[i][t] * own - vm[i][t] * std::log(own);
                loss[1] += vn[i][t] * pooled - vm[i][t] * std::log(pooled);
            }
    }
    return loss[1] < loss[0] ? w_big : 0.0;
}

} // namespace oracles
