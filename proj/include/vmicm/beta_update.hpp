#pragma once

#include <vector>

#include <Eigen/Dense>

#include "vmicm/bspline.hpp"
#include "vmicm/group_descent.hpp"
#include "vmicm/model.hpp"

namespace vmicm {

struct BetaUpdateResult {
    LoadingVector beta;
    int iterations = 0;
    bool converged = false;
    double rss = 0.0;
};

// Penalized loading update with the coefficient functions held fixed.
// Each iteration linearizes the spline terms around the current loadings,
// runs MCP coordinate descent on the normalized pseudo-covariates
// (first loading unpenalized) and renormalizes to the unit sphere.
class BetaProblem {
public:
    // `free_mask[d]` false pins loading d at zero (used by the oracle fit);
    // an empty mask leaves every loading free.
    BetaProblem(const Dataset& data, const BasisSpec& spec, const Coefficients& gamma,
                std::vector<bool> free_mask = {});

    // Weights scale lambda per loading (entry 0 unused). Throws
    // DegenerateUpdateError if the unnormalized update is the zero vector.
    BetaUpdateResult solve(double lambda, const std::vector<double>& weights, double tau,
                           const LoadingVector& start, const SolverConfig& config) const;

    // Residual sum of squares with the index clamped into the basis domain.
    double rss(const LoadingVector& beta) const;

    // Smallest lambda (to bisection accuracy) whose solve from `start`
    // leaves every penalized loading at zero.
    double lambda_max(const std::vector<double>& weights, double tau, const LoadingVector& start,
                      const SolverConfig& config) const;

    Eigen::Index q() const { return x_.cols(); }
    Eigen::Index rows() const { return y_.size(); }
    double response_energy() const { return y_.squaredNorm(); }

private:
    struct Linearization {
        Eigen::VectorXd residual;  // y - fitted(beta)
        Eigen::VectorXd slope;     // d fitted / d index, per row
    };
    Linearization linearize(const Eigen::VectorXd& beta) const;
    bool penalized(Eigen::Index d) const { return d > 0 && free_[static_cast<std::size_t>(d)]; }

    Eigen::VectorXd y_;
    Eigen::MatrixXd x_;
    Eigen::MatrixXd g_active_;                // gene columns with nonzero coefficients
    std::vector<GeneCoefficients> active_;    // matching coefficients
    BasisSpec spec_;
    std::vector<bool> free_;
};

}  // namespace vmicm
