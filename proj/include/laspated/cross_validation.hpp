#pragma once

// Choice of a common smoothing weight (w_ij = W_G = w) by K-fold validation.
//
// Each cell (c,i,t) carries a list of per-occurrence arrival counts. Entry j of
// every list goes to block j mod K, K = max(1, floor(1/cv_proportion)). For
// fold k the model is fitted on block k alone and scored on the other blocks
// with the unpenalized Poisson negative log-likelihood. With K = 1 there is
// nothing to hold out and the score is in-sample.

#include "error.hpp"
#include "ndarray.hpp"
#include "param.hpp"
#include "regularized_model.hpp"
#include "solver.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <ctime>
#include <limits>
#include <vector>

namespace laspated {

using SampleLists = NdArray<std::vector<double>>;  // (C,R,T)

struct CrossValidationResult {
    double cpu_time = 0.0;  // seconds
    double weight = 0.0;
    Array lambda;           // final fit on all data
    SolverResult final_fit;
    std::vector<double> mean_losses;  // per candidate, in input order
};

[[nodiscard]] inline std::size_t fold_count(double cv_proportion) {
    const double k = std::floor(1.0 / cv_proportion + 1e-9);
    return static_cast<std::size_t>(std::max(1.0, k));
}

struct FoldData {
    Array N, M;
};

// Totals over samples whose index j satisfies j mod K == k (or != k when `complement`).
[[nodiscard]] inline FoldData fold_totals(const SampleLists& samples, std::size_t K, std::size_t k, bool complement) {
    FoldData out{Array(samples.shape(), 0.0), Array(samples.shape(), 0.0)};
    for (std::size_t cell = 0; cell < samples.size(); ++cell) {
        const auto& list = samples[cell];
        for (std::size_t j = 0; j < list.size(); ++j) {
            if ((j % K == k) == complement) continue;
            out.N[cell] += 1.0;
            out.M[cell] += list[j];
        }
    }
    return out;
}

[[nodiscard]] inline FoldData sample_totals(const SampleLists& samples) {
    FoldData out{Array(samples.shape(), 0.0), Array(samples.shape(), 0.0)};
    for (std::size_t cell = 0; cell < samples.size(); ++cell) {
        out.N[cell] = static_cast<double>(samples[cell].size());
        for (double v : samples[cell]) out.M[cell] += v;
    }
    return out;
}

// Per-type pooled rate sum M / sum N d, clamped to the box.
[[nodiscard]] inline Array pooled_start(const Array& N, const Array& M, const std::vector<double>& durations,
                                        const Param& param) {
    Array x(N.shape(), 0.0);
    const std::size_t C = N.dim(0), per = N.size() / std::max<std::size_t>(C, 1), T = durations.size();
    for (std::size_t c = 0; c < C; ++c) {
        double m = 0.0, e = 0.0;
        for (std::size_t k = c * per; k < (c + 1) * per; ++k) {
            m += M[k];
            e += N[k] * durations[k % T];
        }
        const double rate = e > 0.0 ? m / e : param.floor();
        for (std::size_t k = c * per; k < (c + 1) * per; ++k) x[k] = std::clamp(rate, param.floor(), param.upper_lambda);
    }
    return x;
}

[[nodiscard]] inline SolverResult fit_with_weight(RegularizedProblem problem, const Param& param, const Array& N,
                                                  const Array& M, double weight) {
    problem.N = N;
    problem.M = M;
    problem.set_common_weight(weight);
    const Array x0 = pooled_start(N, M, problem.durations, param);
    const RegularizedModel model(std::move(problem), param);
    return projected_gradient_armijo_feasible(model, param, x0);
}

// `problem` supplies structure (durations, groups, neighbors, distances); its N,
// M, alpha and group weights are replaced.
[[nodiscard]] inline CrossValidationResult cross_validation(const Param& param, const RegularizedProblem& problem,
                                                            const SampleLists& samples,
                                                            const std::vector<double>& cv_weights) {
    param.validate();
    if (cv_weights.empty()) throw DataError("cross validation needs at least one candidate weight");
    for (double w : cv_weights)
        if (!(w >= 0.0) || !std::isfinite(w)) throw DataError("Each weight must be non-negative");
    if (samples.shape() != std::vector<std::size_t>{problem.C, problem.R, problem.T})
        throw DataError("sample lists must have shape (C,R,T)");
    const auto all = sample_totals(samples);
    if (std::all_of(all.N.flat().begin(), all.N.flat().end(), [](double n) { return n == 0.0; }))
        throw DataError("cross validation needs a nonempty sample");

    const std::clock_t start = std::clock();
    const std::size_t K = fold_count(param.cv_proportion);
    std::vector<FoldData> est, val;
    for (std::size_t k = 0; k < K; ++k) {
        est.push_back(fold_totals(samples, K, k, false));
        val.push_back(K == 1 ? est.back() : fold_totals(samples, K, k, true));
    }

    CrossValidationResult res;
    std::size_t best = 0;
    for (std::size_t w = 0; w < cv_weights.size(); ++w) {
        double loss = 0.0;
        for (std::size_t k = 0; k < K; ++k) {
            const auto fit = fit_with_weight(problem, param, est[k].N, est[k].M, cv_weights[w]);
            loss += RegularizedModel::likelihood_term(val[k].N, val[k].M, problem.durations, fit.x);
        }
        loss /= static_cast<double>(K);
        res.mean_losses.push_back(loss);
        if (w == 0) continue;
        const double cur = res.mean_losses[best];
        const double tol = 1e-9 * std::max(std::abs(loss), std::abs(cur));
        if (loss < cur - tol || (std::abs(loss - cur) <= tol && cv_weights[w] < cv_weights[best])) best = w;
    }
    res.weight = cv_weights[best];
    res.final_fit = fit_with_weight(problem, param, all.N, all.M, res.weight);
    res.lambda = res.final_fit.x;
    res.cpu_time = static_cast<double>(std::clock() - start) / CLOCKS_PER_SEC;
    return res;
}

} // namespace laspated
