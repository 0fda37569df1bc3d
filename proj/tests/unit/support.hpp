#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>

#include <Eigen/Dense>

#include "vmicm/model.hpp"
#include "vmicm/rng.hpp"

namespace vmicm::testing {

inline Eigen::MatrixXd uniform_matrix(Eigen::Index rows, Eigen::Index cols, RandomStream& rng,
                                      double lo = 0.0, double hi = 1.0) {
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i) {
        for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = rng.uniform(lo, hi);
    }
    return m;
}

inline Eigen::MatrixXd normal_matrix(Eigen::Index rows, Eigen::Index cols, RandomStream& rng) {
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i) {
        for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = rng.normal();
    }
    return m;
}

// Central difference of a vector-valued function of one variable.
inline Eigen::VectorXd central_difference(const std::function<Eigen::VectorXd(double)>& f, double x,
                                          double h = 1e-6) {
    return (f(x + h) - f(x - h)) / (2.0 * h);
}

// Argmin of a scalar function over a uniform grid, refined around the best
// point until the spacing drops below `tol`.
inline double grid_argmin(const std::function<double(double)>& f, double lo, double hi,
                          double tol = 1e-7) {
    const double floor = lo;
    const double ceiling = hi;
    double best = lo;
    while (hi - lo > tol) {
        const int steps = 2000;
        const double step = (hi - lo) / steps;
        double best_value = f(lo);
        best = lo;
        for (int i = 1; i <= steps; ++i) {
            const double x = lo + i * step;
            const double v = f(x);
            if (v < best_value) {
                best_value = v;
                best = x;
            }
        }
        lo = std::max(best - 2.0 * step, floor);
        hi = std::min(best + 2.0 * step, ceiling);
    }
    return best;
}

}  // namespace vmicm::testing
