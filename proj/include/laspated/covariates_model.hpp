#pragma once

// Intensity model with covariates: lambda(c,d,t,i) = sum_j beta(c,d,t,j) x(j,i).
// Objective is the Poisson negative log-likelihood
//
//   sum_{c,d,t,i} N d_t lambda - M ln lambda
//
// over {beta >= 0, lambda(c,d,t,i) >= max(lower_lambda, EPS) for all i}.
// The feasible set is a product of one polyhedron per (c,d,t) block.

#include "error.hpp"
#include "ndarray.hpp"
#include "param.hpp"
#include "qp_projection.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace laspated {

struct CovariatesProblem {
    std::size_t C = 0, D = 0, T = 0, R = 0, J = 0;
    Array N;  // (C,D,T,R)
    Array M;  // (C,D,T,R)
    Array x;  // (J,R) regressors
    std::vector<double> durations;  // T, hours

    void validate() const {
        const std::vector<std::size_t> shape{C, D, T, R};
        if (N.shape() != shape || M.shape() != shape) throw DataError("N and M must have shape (C,D,T,R)");
        if (x.shape() != std::vector<std::size_t>{J, R}) throw DataError("regressors must have shape (J,R)");
        if (durations.size() != T) throw DataError("durations must have length T");
        for (double d : durations)
            if (!(d > 0.0)) throw DataError("durations must be positive");
        for (std::size_t k = 0; k < N.size(); ++k) {
            if (N[k] < 0.0 || M[k] < 0.0) throw DataError("N and M must be non-negative");
            if (N[k] == 0.0 && M[k] != 0.0) throw DataError("arrivals recorded for a cell without observations");
        }
        for (std::size_t i = 0; i < R; ++i) {
            bool any = false;
            for (std::size_t j = 0; j < J; ++j) {
                if (x(j, i) < 0.0) throw DataError("regressors must be non-negative");
                any = any || x(j, i) > 0.0;
            }
            if (!any) throw DataError("region " + std::to_string(i) + " has all-zero regressors");
        }
    }
};

class CovariatesModel {
public:
    CovariatesModel(CovariatesProblem problem, Param param) : p_(std::move(problem)), param_(param) {
        p_.validate();
        param_.validate();
        for (std::size_t j = 0; j < p_.J; ++j) {
            qp::HalfSpace h{std::vector<double>(p_.J, 0.0), 0.0};
            h.normal[j] = 1.0;
            constraints_.push_back(std::move(h));
        }
        for (std::size_t i = 0; i < p_.R; ++i) {
            qp::HalfSpace h{std::vector<double>(p_.J), param_.floor()};
            for (std::size_t j = 0; j < p_.J; ++j) h.normal[j] = p_.x(j, i);
            constraints_.push_back(std::move(h));
        }
    }

    [[nodiscard]] const CovariatesProblem& problem() const noexcept { return p_; }
    [[nodiscard]] const Param& param() const noexcept { return param_; }
    [[nodiscard]] std::vector<std::size_t> shape() const { return {p_.C, p_.D, p_.T, p_.J}; }

    [[nodiscard]] double lambda_of_beta(const Array& beta, std::size_t c, std::size_t d, std::size_t t,
                                        std::size_t i) const {
        double s = 0.0;
        for (std::size_t j = 0; j < p_.J; ++j) s += beta(c, d, t, j) * p_.x(j, i);
        return s;
    }

    // Intensities (C,D,T,R) for the given coefficients.
    [[nodiscard]] Array intensities(const Array& beta) const {
        check_shape(beta);
        Array lam({p_.C, p_.D, p_.T, p_.R}, 0.0);
        for (std::size_t c = 0; c < p_.C; ++c)
            for (std::size_t d = 0; d < p_.D; ++d)
                for (std::size_t t = 0; t < p_.T; ++t)
                    for (std::size_t i = 0; i < p_.R; ++i) lam(c, d, t, i) = lambda_of_beta(beta, c, d, t, i);
        return lam;
    }

    [[nodiscard]] double f(const Array& beta) const {
        const Array lam = intensities(beta);
        double s = 0.0;
        for (std::size_t k = 0; k < lam.size(); ++k) {
            if (!(lam[k] > 0.0)) throw DataError("non-positive intensity: coefficients are infeasible");
            if (p_.N[k] == 0.0) continue;
            const std::size_t t = (k / p_.R) % p_.T;
            s += p_.N[k] * p_.durations[t] * lam[k] - (p_.M[k] > 0.0 ? p_.M[k] * std::log(lam[k]) : 0.0);
        }
        return s;
    }

    [[nodiscard]] Array gradient(const Array& beta) const {
        const Array lam = intensities(beta);
        Array g(beta.shape(), 0.0);
        for (std::size_t c = 0; c < p_.C; ++c)
            for (std::size_t d = 0; d < p_.D; ++d)
                for (std::size_t t = 0; t < p_.T; ++t)
                    for (std::size_t i = 0; i < p_.R; ++i) {
                        const double l = lam(c, d, t, i);
                        if (!(l > 0.0)) throw DataError("non-positive intensity: coefficients are infeasible");
                        const double n = p_.N(c, d, t, i);
                        if (n == 0.0) continue;
                        const double r = n * p_.durations[t] - p_.M(c, d, t, i) / l;
                        for (std::size_t j = 0; j < p_.J; ++j) g(c, d, t, j) += p_.x(j, i) * r;
                    }
        return g;
    }

    [[nodiscard]] Array projection(const Array& y) const {
        check_shape(y);
        Array out(y.shape(), 0.0);
        const std::size_t blocks = p_.C * p_.D * p_.T;
        for (std::size_t blk = 0; blk < blocks; ++blk) {
            const std::span<const double> yb(y.data() + blk * p_.J, p_.J);
            const auto proj = qp::project(yb, constraints_, param_.EPS);
            std::copy(proj.point.begin(), proj.point.end(), out.data() + blk * p_.J);
        }
        return out;
    }

    [[nodiscard]] bool is_feasible(const Array& beta) const {
        if (beta.shape() != shape()) return false;
        for (double v : beta.flat())
            if (v < -param_.EPS) return false;
        const Array lam = intensities(beta);
        const double lo = param_.floor() - param_.EPS;
        return std::all_of(lam.flat().begin(), lam.flat().end(), [&](double v) { return v >= lo; });
    }

    [[nodiscard]] double get_rhs(const Array& grad, const Array& dir) const { return dot(grad, dir); }

    // f(x) + min of <grad, y - x> over beta in [0, upper_lambda]^J, a relaxation
    // of the feasible set. Valid as long as the minimizer has beta <= upper_lambda.
    [[nodiscard]] double get_lower_bound(const Array& beta, const Array& grad) const {
        const double hi = param_.upper_lambda;
        double lin = 0.0;
        for (std::size_t k = 0; k < beta.size(); ++k)
            lin += grad[k] < 0.0 ? grad[k] * (hi - beta[k]) : -grad[k] * beta[k];
        return f(beta) + lin;
    }

    [[nodiscard]] double average_rate_difference(const Array& a, const Array& b) const {
        return laspated::average_rate_difference(intensities(a), intensities(b));
    }

private:
    void check_shape(const Array& beta) const {
        if (beta.shape() != shape()) throw DataError("coefficient array must have shape (C,D,T,J)");
    }

    CovariatesProblem p_;
    Param param_;
    std::vector<qp::HalfSpace> constraints_;
};

} // namespace laspated
