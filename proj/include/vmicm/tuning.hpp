#pragma once

#include <functional>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "vmicm/beta_update.hpp"
#include "vmicm/group_descent.hpp"
#include "vmicm/model.hpp"
#include "vmicm/steps.hpp"

namespace vmicm {

struct TuningConfig {
    int smoothness = 2;           // r in the knot-range rate n^{1/(2r+1)}
    std::optional<int> knots;     // fixes K instead of searching
    std::optional<int> order;     // fixes h instead of searching
    int grid_size = 100;
    double lambda_min = 1e-3;
    std::vector<double> tau_grid; // empty: use SolverConfig::tau only
    double weight_cap = 1e8;
    // RSS values below rss_floor * ‖y‖^2 are treated as equal in BIC.
    double rss_floor = 1e-20;

    void validate() const;
};

struct LambdaGrid {
    std::vector<double> values;  // strictly decreasing
    double lambda_max = 0.0;
    double lambda_min = 1e-3;
    bool degenerate = false;     // lambda_max <= lambda_min: single point
};

LambdaGrid build_grid(double lambda_max, int count = 100, double lambda_min = 1e-3);

struct BicRecord {
    double lambda = 0.0;
    double tau = 0.0;
    double rss = 0.0;
    int df = 0;
    double bic = 0.0;
};

struct BicTrace {
    std::vector<BicRecord> rows;
    std::size_t argmin = 0;
    std::size_t skipped = 0;
};

double bic_value(double rss, Eigen::Index n, int df);

// 1 / x capped at `cap`; used for every adaptive weight.
double adaptive_weight(double magnitude, double cap);

// Weights 1/‖gamma_k^un‖ for genes 1..p from the unpenalized fit.
std::vector<double> adaptive_weights_step1(const Dataset& data, const BasisSpec& spec,
                                           const LoadingVector& beta, const SolverConfig& config,
                                           double cap = 1e8);
std::vector<double> adaptive_weights_from_unpenalized(const Coefficients& unpenalized,
                                                      double cap = 1e8);
// Weights 1/|gamma_k1| for genes 1..p from the varying-selection estimate.
std::vector<double> adaptive_weights_step2(const Coefficients& gamma1, double cap = 1e8);
// Weights 1/|beta_d^un| (entry 0 unused, set to 1).
std::vector<double> adaptive_weights_step3(const LoadingVector& unpenalized, double cap = 1e8);

// Smallest lambda at which every penalized group of `layout` is zero.
// `weights` holds one entry per penalized group, in layout order.
double lambda_max_for_layout(const Eigen::VectorXd& y, const Eigen::MatrixXd& w,
                             const GroupLayout& layout, const std::vector<double>& weights,
                             double tau, const SolverConfig& config = {});

struct GammaSelection {
    double lambda = 0.0;
    double tau = 3.0;
    BicTrace trace;
    Coefficients gamma;
    std::vector<double> weights;
};

struct BetaSelection {
    double lambda = 0.0;
    double tau = 3.0;
    BicTrace trace;
    LoadingVector beta;
    std::vector<double> weights;
};

// Path over `grid` (descending) with warm starts from the null start;
// df counts the coefficients of nonzero penalized groups plus `df_offset`.
// Ties in BIC go to the larger lambda.
GammaSelection select_on_path(const SelectionProblem& problem, const std::vector<double>& weights,
                              const std::vector<double>& grid, double tau, int df_offset,
                              const SolverConfig& config, double rss_floor);

// Penalized groups are weighted by 1 / (‖Q_k^T y‖ / sqrt(n)), the marginal
// fit of each block in its orthonormal coordinates.
GammaSelection select_lambda1(const Dataset& data, const BasisSpec& spec, const LoadingVector& beta,
                              const TuningConfig& tuning, const SolverConfig& config);

// Constants are weighted by the inverse magnitude of their gamma1 values in
// the orthonormal coordinates of the constant-selection design.
GammaSelection select_lambda2(const Dataset& data, const BasisSpec& spec, const LoadingVector& beta,
                              const Coefficients& gamma1, const TuningConfig& tuning,
                              const SolverConfig& config);

BetaSelection select_lambda3(const Dataset& data, const BasisSpec& spec, const Coefficients& gamma2,
                             const LoadingVector& beta_start, const TuningConfig& tuning,
                             const SolverConfig& config);

using RssFunction = std::function<double(const LoadingVector&)>;

// Step 3 path on a prepared problem; every grid point starts from beta_start.
// `rss_of` scores each path point for BIC; empty uses the fixed-coefficient RSS.
BetaSelection select_beta_on_path(const BetaProblem& problem, const std::vector<double>& weights,
                                  const std::vector<double>& grid, double tau,
                                  const LoadingVector& beta_start, const SolverConfig& config,
                                  double rss_floor, const RssFunction& rss_of = {});

struct KnotCandidate {
    int knots = 0;
    int order = 0;
    double rss = 0.0;
    double criterion = 0.0;
};

struct KnotSelection {
    int knots = 0;
    int order = 0;
    std::vector<KnotCandidate> candidates;
};

// Intercept-only spline fit on the index for every (K, h) in the grid;
// minimizes log(rss) + log(n)/n (K + h). The response first loses the gene
// terms of the working model f_k(u) = a_k + b_k u fitted at beta0.
KnotSelection select_knots_order(const Dataset& data, const LoadingVector& beta0,
                                 const TuningConfig& tuning, const SolverConfig& config);

}  // namespace vmicm
