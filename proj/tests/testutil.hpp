#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <vector>

#include "spottune/tensor.hpp"

namespace spottune::testutil {

// Relative error with a unit floor, so near-zero reference gradients are
// compared absolutely.
inline double rel_err(double analytic, double numeric) {
    return std::abs(analytic - numeric) / std::max(1.0, std::abs(numeric));
}

// Central finite differences of a scalar-valued function of a flat parameter
// vector. This is the independent gradient oracle used against the tape.
inline std::vector<double> finite_difference(
    const std::function<double(const std::vector<double>&)>& f, std::vector<double> x,
    double h = 1e-5) {
    std::vector<double> g(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double keep = x[i];
        x[i] = keep + h;
        const double up = f(x);
        x[i] = keep - h;
        const double down = f(x);
        x[i] = keep;
        g[i] = (up - down) / (2.0 * h);
    }
    return g;
}

// Worst rel_err between an analytic gradient and its finite-difference
// estimate.
inline double max_grad_rel_err(std::span<const double> analytic, std::span<const double> numeric) {
    double worst = 0.0;
    for (std::size_t i = 0; i < analytic.size(); ++i) {
        worst = std::max(worst, rel_err(analytic[i], numeric[i]));
    }
    return worst;
}

}  // namespace spottune::testutil
