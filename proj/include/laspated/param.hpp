#pragma once

#include "error.hpp"

#include <algorithm>
#include <cmath>

namespace laspated {

// Parameters of the projected gradient method and of cross validation.
struct Param {
    double EPS = 1e-5;          // comparison tolerance, projection KKT tolerance, intensity floor
    double sigma = 0.5;         // Armijo slope fraction
    double accuracy = 1e-3;     // stopping gap f(x) - lower_bound(x)
    int max_iter = 100;
    double lower_lambda = 1e-6;
    double upper_lambda = 1e3;
    double beta_bar = 1.0;      // initial step of the projected gradient
    double cv_proportion = 0.2; // fraction of samples in each estimation block

    [[nodiscard]] double floor() const noexcept { return std::max(lower_lambda, EPS); }

    void validate() const {
        if (!(EPS > 0.0)) throw DataError("EPS must be > 0");
        if (!(sigma > 0.0 && sigma < 1.0)) throw DataError("sigma must lie in (0,1)");
        if (!(accuracy >= 0.0)) throw DataError("accuracy must be >= 0");
        if (max_iter < 0) throw DataError("max_iter must be >= 0");
        if (!(lower_lambda <= upper_lambda) || !(floor() <= upper_lambda))
            throw DataError("lower_lambda must not exceed upper_lambda");
        if (!(beta_bar > 0.0)) throw DataError("beta_bar must be > 0");
        if (!(cv_proportion > 0.0 && cv_proportion <= 1.0)) throw DataError("cv_proportion must lie in (0,1]");
    }
};

} // namespace laspated
