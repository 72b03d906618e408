#pragma once

// Intensity model without covariates. Decision variable lambda(c,i,t) > 0,
// objective
//
//   sum_{c,i,t} N d_t lambda - M ln lambda
//   + sum_{c,t} sum_{i<j neighbors} w_ij (lambda_cit - lambda_cjt)^2
//   + sum_{c,i} sum_G W_G sum_{t<t' in G} (lambda_cit - lambda_cit')^2
//
// over the box [max(lower_lambda, EPS), upper_lambda].

#include "error.hpp"
#include "ndarray.hpp"
#include "param.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

namespace laspated {

struct RegularizedProblem {
    std::size_t C = 0, R = 0, T = 0;
    Array N;  // (C,R,T) observation counts
    Array M;  // (C,R,T) arrival totals
    std::vector<double> durations;                 // T, hours
    std::vector<std::vector<std::size_t>> groups;  // partition of 0..T-1
    std::vector<std::size_t> which_group;          // T
    std::vector<double> group_weights;             // W_G per group
    Array alpha;                                   // (R,R) neighbor weights w_ij
    Array distance;                                // (R,R) centroid distances, km
    std::vector<int> type_region;                  // R, carried through, unused by the objective
    std::vector<std::vector<std::size_t>> neighbors;
    bool scale_by_distance = false;                // use w_ij / dist_ij

    // A problem with no penalties: one group per period, zero weights, no neighbors.
    static RegularizedProblem unpenalized(Array N, Array M, std::vector<double> durations) {
        RegularizedProblem p;
        p.C = N.dim(0);
        p.R = N.dim(1);
        p.T = N.dim(2);
        p.N = std::move(N);
        p.M = std::move(M);
        p.durations = std::move(durations);
        for (std::size_t t = 0; t < p.T; ++t) {
            p.groups.push_back({t});
            p.which_group.push_back(t);
        }
        p.group_weights.assign(p.T, 0.0);
        p.alpha = Array({p.R, p.R}, 0.0);
        p.distance = Array({p.R, p.R}, 0.0);
        p.type_region.assign(p.R, 0);
        p.neighbors.assign(p.R, {});
        return p;
    }

    // Sets every neighbor weight and every group weight to w.
    void set_common_weight(double w) {
        std::fill(group_weights.begin(), group_weights.end(), w);
        alpha.fill(0.0);
        for (std::size_t i = 0; i < R; ++i)
            for (std::size_t j : neighbors[i]) alpha(i, j) = w;
    }

    void validate() const {
        const std::vector<std::size_t> shape{C, R, T};
        if (N.shape() != shape || M.shape() != shape) throw DataError("N and M must have shape (C,R,T)");
        for (std::size_t k = 0; k < N.size(); ++k) {
            if (N[k] < 0.0 || M[k] < 0.0) throw DataError("N and M must be non-negative");
            if (N[k] == 0.0 && M[k] != 0.0) throw DataError("arrivals recorded for a cell without observations");
        }
        if (durations.size() != T) throw DataError("durations must have length T");
        for (double d : durations)
            if (!(d > 0.0)) throw DataError("durations must be positive");
        if (which_group.size() != T) throw DataError("which_group must have length T");
        if (group_weights.size() != groups.size()) throw DataError("one weight per time group is required");
        std::vector<int> seen(T, 0);
        for (std::size_t g = 0; g < groups.size(); ++g) {
            if (group_weights[g] < 0.0) throw DataError("group weights must be non-negative");
            for (std::size_t t : groups[g]) {
                if (t >= T) throw DataError("time group index out of range");
                if (which_group[t] != g) throw DataError("which_group disagrees with groups");
                ++seen[t];
            }
        }
        for (int s : seen)
            if (s != 1) throw DataError("time groups must partition the periods");
        if (alpha.shape() != std::vector<std::size_t>{R, R}) throw DataError("alpha must be R x R");
        if (distance.size() != 0 && distance.shape() != std::vector<std::size_t>{R, R})
            throw DataError("distance must be R x R");
        if (neighbors.size() != R) throw DataError("neighbors must have R entries");
        std::vector<std::vector<char>> nb(R, std::vector<char>(R, 0));
        for (std::size_t i = 0; i < R; ++i)
            for (std::size_t j : neighbors[i]) {
                if (j >= R || j == i) throw DataError("invalid neighbor index for region " + std::to_string(i));
                nb[i][j] = 1;
            }
        for (std::size_t i = 0; i < R; ++i)
            for (std::size_t j = 0; j < R; ++j) {
                if (nb[i][j] != nb[j][i]) throw DataError("neighbor relation must be symmetric");
                const double a = alpha(i, j);
                if (a < 0.0 || a != alpha(j, i)) throw DataError("alpha must be symmetric and non-negative");
                if (a > 0.0 && !nb[i][j]) throw DataError("alpha is positive for non-neighbors " + std::to_string(i) + "," + std::to_string(j));
                if (scale_by_distance && a > 0.0 && !(distance(i, j) > 0.0))
                    throw DataError("distance scaling needs positive neighbor distances");
            }
    }
};

class RegularizedModel {
public:
    RegularizedModel(RegularizedProblem problem, Param param) : p_(std::move(problem)), param_(param) {
        p_.validate();
        param_.validate();
        for (std::size_t i = 0; i < p_.R; ++i)
            for (std::size_t j : p_.neighbors[i]) {
                if (j <= i) continue;
                double w = p_.alpha(i, j);
                if (p_.scale_by_distance && w > 0.0) w /= p_.distance(i, j);
                if (w > 0.0) pairs_.push_back({i, j, w});
            }
    }

    [[nodiscard]] const RegularizedProblem& problem() const noexcept { return p_; }
    [[nodiscard]] const Param& param() const noexcept { return param_; }
    [[nodiscard]] std::vector<std::size_t> shape() const { return {p_.C, p_.R, p_.T}; }

    // Unpenalized Poisson negative log-likelihood with the given counts.
    [[nodiscard]] static double likelihood_term(const Array& N, const Array& M, const std::vector<double>& durations,
                                                const Array& lambda) {
        const std::size_t T = durations.size();
        double s = 0.0;
        for (std::size_t k = 0; k < lambda.size(); ++k) {
            if (N[k] == 0.0) continue;
            s += N[k] * durations[k % T] * lambda[k] - (M[k] > 0.0 ? M[k] * std::log(lambda[k]) : 0.0);
        }
        return s;
    }

    [[nodiscard]] double f(const Array& lambda) const {
        check(lambda);
        double s = likelihood_term(p_.N, p_.M, p_.durations, lambda);
        for (std::size_t c = 0; c < p_.C; ++c) {
            for (const auto& [i, j, w] : pairs_)
                for (std::size_t t = 0; t < p_.T; ++t) {
                    const double d = lambda(c, i, t) - lambda(c, j, t);
                    s += w * d * d;
                }
            for (std::size_t i = 0; i < p_.R; ++i)
                for (std::size_t g = 0; g < p_.groups.size(); ++g) {
                    const double W = p_.group_weights[g];
                    const auto& G = p_.groups[g];
                    if (W == 0.0 || G.size() < 2) continue;
                    // sum over unordered pairs = |G| * sum (lambda - mean)^2
                    double mean = 0.0;
                    for (std::size_t t : G) mean += lambda(c, i, t);
                    mean /= static_cast<double>(G.size());
                    double ss = 0.0;
                    for (std::size_t t : G) ss += (lambda(c, i, t) - mean) * (lambda(c, i, t) - mean);
                    s += W * static_cast<double>(G.size()) * ss;
                }
        }
        return s;
    }

    [[nodiscard]] Array gradient(const Array& lambda) const {
        check(lambda);
        Array g(lambda.shape(), 0.0);
        for (std::size_t k = 0; k < lambda.size(); ++k) {
            if (p_.N[k] == 0.0) continue;
            g[k] = p_.N[k] * p_.durations[k % p_.T] - p_.M[k] / lambda[k];
        }
        for (std::size_t c = 0; c < p_.C; ++c) {
            for (const auto& [i, j, w] : pairs_)
                for (std::size_t t = 0; t < p_.T; ++t) {
                    const double d = 2.0 * w * (lambda(c, i, t) - lambda(c, j, t));
                    g(c, i, t) += d;
                    g(c, j, t) -= d;
                }
            for (std::size_t i = 0; i < p_.R; ++i)
                for (std::size_t gi = 0; gi < p_.groups.size(); ++gi) {
                    const double W = p_.group_weights[gi];
                    const auto& G = p_.groups[gi];
                    if (W == 0.0 || G.size() < 2) continue;
                    double sum = 0.0;
                    for (std::size_t t : G) sum += lambda(c, i, t);
                    const double n = static_cast<double>(G.size());
                    for (std::size_t t : G) g(c, i, t) += 2.0 * W * (n * lambda(c, i, t) - sum);
                }
        }
        return g;
    }

    [[nodiscard]] Array projection(const Array& raw) const {
        Array out = raw;
        const double lo = param_.floor(), hi = param_.upper_lambda;
        for (auto& v : out.flat()) v = std::clamp(v, lo, hi);
        return out;
    }

    [[nodiscard]] bool is_feasible(const Array& lambda) const {
        if (lambda.shape() != shape()) return false;
        const double lo = param_.floor(), hi = param_.upper_lambda;
        return std::all_of(lambda.flat().begin(), lambda.flat().end(),
                           [&](double v) { return v >= lo - param_.EPS && v <= hi + param_.EPS; });
    }

    [[nodiscard]] double get_rhs(const Array& grad, const Array& dir) const { return dot(grad, dir); }

    // f(x) + min over the box of <grad, y - x>.
    [[nodiscard]] double get_lower_bound(const Array& lambda, const Array& grad) const {
        const double lo = param_.floor(), hi = param_.upper_lambda;
        double lin = 0.0;
        for (std::size_t k = 0; k < lambda.size(); ++k)
            lin += std::min(grad[k] * (lo - lambda[k]), grad[k] * (hi - lambda[k]));
        return f(lambda) + lin;
    }

    [[nodiscard]] double average_rate_difference(const Array& a, const Array& b) const {
        return laspated::average_rate_difference(a, b);
    }

private:
    struct Pair {
        std::size_t i, j;
        double w;
    };

    void check(const Array& lambda) const {
        if (lambda.shape() != shape()) throw DataError("intensity array must have shape (C,R,T)");
        for (double v : lambda.flat())
            if (!(v > 0.0)) throw DataError("intensities must be positive");
    }

    RegularizedProblem p_;
    Param param_;
    std::vector<Pair> pairs_;
};

} // namespace laspated
