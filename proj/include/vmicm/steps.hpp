#pragma once

#include <vector>

#include <Eigen/Dense>

#include "vmicm/beta_update.hpp"
#include "vmicm/bspline.hpp"
#include "vmicm/group_descent.hpp"
#include "vmicm/model.hpp"

namespace vmicm {

struct InitialEstimates {
    LoadingVector beta;
    BasisSpec spec;
    Coefficients gamma;
};

// Least squares loadings of the working model in which every coefficient
// function is linear in the index, f_k(u) = a_k + b_k u. Normalized to unit
// length with a positive first entry.
LoadingVector initial_beta(const Dataset& data, double ridge_eps);

// Basis on [min, max] of the index x^T beta.
BasisSpec anchored_basis(const Dataset& data, const LoadingVector& beta, int knots, int order);

// Initial loadings plus the ridge-stabilized unpenalized spline fit at them.
InitialEstimates initial_estimates(const Dataset& data, int knots, int order,
                                   const SolverConfig& config);

// Ridge-stabilized unpenalized spline coefficients at the given loadings.
Coefficients unpenalized_fit(const Dataset& data, const BasisSpec& spec, const LoadingVector& beta,
                             const SolverConfig& config);

// Ridge-stabilized least squares restricted to a known structure: full
// splines for the intercept and the varying genes, one constant column for
// each constant gene, nothing for the zero genes.
Coefficients structured_fit(const Dataset& data, const BasisSpec& spec, const LoadingVector& beta,
                            const FunctionClassification& structure, const SolverConfig& config);

// RSS of `structured_fit` on a basis anchored at the index range of `beta`.
double structured_rss(const Dataset& data, const LoadingVector& beta, int knots, int order,
                      const FunctionClassification& structure, const SolverConfig& config);

// Group-penalized least squares over a fixed layout: the shared machinery
// of the varying and constant selection steps. Penalized weights are given
// per gene (entry k-1 for gene k) so both steps index them the same way.
class SelectionProblem {
public:
    SelectionProblem(const Dataset& data, const BasisSpec& spec, const LoadingVector& beta,
                     GroupLayout layout);
    // Generic form on an explicit design; penalized groups index the weights
    // through their `gene` field (1..genes).
    SelectionProblem(Eigen::VectorXd y, const Eigen::MatrixXd& w, const GroupLayout& layout,
                     Eigen::Index genes, int basis_size);

    const OrthonormalDesign& design() const { return design_; }
    const Eigen::VectorXd& y() const { return y_; }
    Eigen::Index p() const { return p_; }
    int basis_size() const { return basis_size_; }

    std::vector<McpParams> penalties(double lambda, const std::vector<double>& gene_weights,
                                     double tau) const;

    // Unpenalized blocks fitted with every penalized block at zero.
    std::vector<Eigen::VectorXd> null_start(const SolverConfig& config) const;

    DescentResult solve(double lambda, const std::vector<double>& gene_weights, double tau,
                        std::vector<Eigen::VectorXd> start, const SolverConfig& config,
                        bool record_trace = false) const;

    // Largest ‖z_m‖ / weight_m over penalized blocks at the null start,
    // confirmed by a solve that leaves every penalized block at zero.
    double lambda_max(const std::vector<double>& gene_weights, double tau,
                      const SolverConfig& config) const;

    Coefficients coefficients(const DescentResult& result) const;
    int nonzero_penalized(const DescentResult& result) const;
    // Coefficient count of the nonzero penalized groups.
    int nonzero_penalized_coefficients(const DescentResult& result) const;

private:
    Eigen::VectorXd y_;
    Eigen::Index p_;
    int basis_size_;
    OrthonormalDesign design_;
};

// Genes 1..p whose varying part is nonzero.
std::vector<int> varying_set(const Coefficients& coef);

Coefficients step1_varying_selection(const Dataset& data, const BasisSpec& spec,
                                     const LoadingVector& beta, double lambda1,
                                     const std::vector<double>& weights, const SolverConfig& config);

Coefficients step2_constant_selection(const Dataset& data, const BasisSpec& spec,
                                      const LoadingVector& beta, const Coefficients& gamma1,
                                      double lambda2, const std::vector<double>& weights,
                                      const SolverConfig& config);

LoadingVector step3_beta_update(const Dataset& data, const BasisSpec& spec,
                                const Coefficients& gamma2, double lambda3,
                                const std::vector<double>& weights, const LoadingVector& beta_start,
                                const SolverConfig& config);

}  // namespace vmicm
