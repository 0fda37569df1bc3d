#include "vmicm/steps.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "vmicm/error.hpp"

namespace vmicm {

LoadingVector initial_beta(const Dataset& data, double ridge_eps) {
    data.validate();
    const Eigen::Index n = data.n();
    const Eigen::Index q = data.q();
    const Eigen::Index genes = data.g.cols();
    if (n <= q) throw InitializationError("initialization needs n > q");

    // Working model f_k(u) = a_k + b_k u. The unrestricted fit of
    // y on (G_k, G_k x_d) gives a coefficient matrix whose rank-one
    // approximation b beta^T seeds alternating least squares.
    Eigen::MatrixXd full(n, genes * (q + 1));
    full.leftCols(genes) = data.g;
    for (Eigen::Index k = 0; k < genes; ++k) {
        for (Eigen::Index d = 0; d < q; ++d) {
            full.col(genes + k * q + d) = data.g.col(k).cwiseProduct(data.x.col(d));
        }
    }
    const Eigen::VectorXd coef = ridge_least_squares(full, data.y, ridge_eps);
    const Eigen::MatrixXd slopes =
        Eigen::Map<const Eigen::MatrixXd>(coef.data() + genes, q, genes).transpose();
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(slopes, Eigen::ComputeThinV);
    Eigen::VectorXd beta = svd.matrixV().col(0);
    if (!beta.allFinite() || beta.isZero(0.0)) {
        throw InitializationError("working-model loadings are zero or non-finite");
    }
    beta = LoadingVector::normalized(beta).values();

    Eigen::MatrixXd paired(n, 2 * genes);
    paired.leftCols(genes) = data.g;
    for (int iter = 0; iter < 100; ++iter) {
        const Eigen::VectorXd index = data.x * beta;
        paired.rightCols(genes) = index.asDiagonal() * data.g;
        const Eigen::VectorXd ab = ridge_least_squares(paired, data.y, ridge_eps);
        const Eigen::VectorXd partial = data.y - data.g * ab.head(genes);
        const Eigen::VectorXd gene_slope = data.g * ab.tail(genes);
        const Eigen::MatrixXd working = gene_slope.asDiagonal() * data.x;
        const Eigen::VectorXd raw = ridge_least_squares(working, partial, ridge_eps);
        if (!raw.allFinite() || raw.isZero(0.0)) break;
        const Eigen::VectorXd next = LoadingVector::normalized(raw).values();
        const double change = (next - beta).cwiseAbs().maxCoeff();
        beta = next;
        if (change < 1e-10) break;
    }
    return LoadingVector(beta);
}

BasisSpec anchored_basis(const Dataset& data, const LoadingVector& beta, int knots, int order) {
    const Eigen::VectorXd index = index_values(data, beta);
    const double lo = index.minCoeff();
    const double hi = index.maxCoeff();
    if (!(hi > lo)) throw SolverError("index values are constant; cannot anchor the basis");
    return make_basis(lo, hi, knots, order);
}

Coefficients unpenalized_fit(const Dataset& data, const BasisSpec& spec, const LoadingVector& beta,
                             const SolverConfig& config) {
    const Eigen::MatrixXd w = design_matrix(data, spec, beta);
    return Coefficients::from_flat(ridge_least_squares(w, data.y, config.ridge_eps), data.p(),
                                   spec.size());
}

Coefficients structured_fit(const Dataset& data, const BasisSpec& spec, const LoadingVector& beta,
                            const FunctionClassification& structure, const SolverConfig& config) {
    const Eigen::Index p = data.p();
    const int L = spec.size();
    std::vector<Eigen::Index> columns;
    for (Eigen::Index j = 0; j < L; ++j) columns.push_back(j);
    for (Eigen::Index k = 1; k <= p; ++k) {
        switch (structure.kind(static_cast<int>(k))) {
            case EffectKind::varying:
                for (Eigen::Index j = 0; j < L; ++j) columns.push_back(k * L + j);
                break;
            case EffectKind::constant:
                columns.push_back(k * L);
                break;
            case EffectKind::zero:
                break;
        }
    }
    const Eigen::MatrixXd w = design_matrix(data, spec, beta);
    Eigen::MatrixXd sub(w.rows(), static_cast<Eigen::Index>(columns.size()));
    for (std::size_t j = 0; j < columns.size(); ++j) sub.col(static_cast<Eigen::Index>(j)) = w.col(columns[j]);
    const Eigen::VectorXd solved = ridge_least_squares(sub, data.y, config.ridge_eps);
    Eigen::VectorXd flat = Eigen::VectorXd::Zero(w.cols());
    for (std::size_t j = 0; j < columns.size(); ++j) flat[columns[j]] = solved[static_cast<Eigen::Index>(j)];
    return Coefficients::from_flat(flat, p, L);
}

double structured_rss(const Dataset& data, const LoadingVector& beta, int knots, int order,
                      const FunctionClassification& structure, const SolverConfig& config) {
    const BasisSpec spec = anchored_basis(data, beta, knots, order);
    const Coefficients coef = structured_fit(data, spec, beta, structure, config);
    const Eigen::VectorXd fitted = fitted_values(index_values(data, beta), data.g, spec, coef);
    return (data.y - fitted).squaredNorm();
}

InitialEstimates initial_estimates(const Dataset& data, int knots, int order,
                                   const SolverConfig& config) {
    InitialEstimates out;
    out.beta = initial_beta(data, config.ridge_eps);
    out.spec = anchored_basis(data, out.beta, knots, order);
    out.gamma = unpenalized_fit(data, out.spec, out.beta, config);
    return out;
}

SelectionProblem::SelectionProblem(const Dataset& data, const BasisSpec& spec,
                                   const LoadingVector& beta, GroupLayout layout)
    : y_(data.y),
      p_(data.p()),
      basis_size_(spec.size()),
      design_(design_matrix(data, spec, beta), layout) {}

SelectionProblem::SelectionProblem(Eigen::VectorXd y, const Eigen::MatrixXd& w,
                                   const GroupLayout& layout, Eigen::Index genes, int basis_size)
    : y_(std::move(y)), p_(genes), basis_size_(basis_size), design_(w, layout) {}

std::vector<McpParams> SelectionProblem::penalties(double lambda,
                                                   const std::vector<double>& gene_weights,
                                                   double tau) const {
    if (static_cast<Eigen::Index>(gene_weights.size()) != p_) {
        throw ParameterError("selection weights must have one entry per gene");
    }
    std::vector<McpParams> out;
    out.reserve(design_.blocks().size());
    for (const auto& block : design_.blocks()) {
        if (block.penalized) {
            out.emplace_back(lambda * gene_weights[static_cast<std::size_t>(block.gene - 1)], tau);
        } else {
            out.emplace_back(0.0, tau);
        }
    }
    return out;
}

std::vector<Eigen::VectorXd> SelectionProblem::null_start(const SolverConfig& config) const {
    std::vector<McpParams> none(design_.blocks().size(), McpParams(0.0, config.tau));
    return group_descent(design_, y_, none, design_.zeros(), config, false, true).orthonormal;
}

DescentResult SelectionProblem::solve(double lambda, const std::vector<double>& gene_weights,
                                      double tau, std::vector<Eigen::VectorXd> start,
                                      const SolverConfig& config, bool record_trace) const {
    return group_descent(design_, y_, penalties(lambda, gene_weights, tau), std::move(start), config,
                         record_trace);
}

double SelectionProblem::lambda_max(const std::vector<double>& gene_weights, double tau,
                                    const SolverConfig& config) const {
    const auto start = null_start(config);
    Eigen::VectorXd r = y_;
    const auto& blocks = design_.blocks();
    for (std::size_t m = 0; m < blocks.size(); ++m) {
        if (blocks[m].q.cols() > 0) r.noalias() -= blocks[m].q * start[m];
    }
    double lambda = 0.0;
    for (const auto& block : blocks) {
        if (!block.penalized || block.q.cols() == 0) continue;
        const double weight = gene_weights[static_cast<std::size_t>(block.gene - 1)];
        lambda = std::max(lambda, (block.q.transpose() * r).norm() / weight);
    }
    if (lambda == 0.0) return 0.0;
    // Nudge upward in growing relative steps until every group is zero.
    const double base = lambda;
    double step = 1e-12;
    for (int attempt = 0; attempt < 100; ++attempt) {
        if (nonzero_penalized(solve(lambda, gene_weights, tau, start, config)) == 0) return lambda;
        lambda = attempt < 10 ? base * (1.0 + step) : lambda * 1.01;
        step *= 10.0;
    }
    throw SolverError("lambda_max confirmation solve kept nonzero groups");
}

Coefficients SelectionProblem::coefficients(const DescentResult& result) const {
    return Coefficients::from_flat(result.coef, p_, basis_size_);
}

int SelectionProblem::nonzero_penalized(const DescentResult& result) const {
    int count = 0;
    const auto& blocks = design_.blocks();
    for (std::size_t m = 0; m < blocks.size(); ++m) {
        if (blocks[m].penalized && (result.orthonormal[m].array() != 0.0).any()) ++count;
    }
    return count;
}

int SelectionProblem::nonzero_penalized_coefficients(const DescentResult& result) const {
    int count = 0;
    const auto& blocks = design_.blocks();
    for (std::size_t m = 0; m < blocks.size(); ++m) {
        if (blocks[m].penalized && (result.orthonormal[m].array() != 0.0).any()) {
            count += static_cast<int>(blocks[m].columns.size());
        }
    }
    return count;
}

std::vector<int> varying_set(const Coefficients& coef) {
    std::vector<int> out;
    for (std::size_t k = 1; k < coef.genes.size(); ++k) {
        if (!coef.genes[k].varying_is_zero()) out.push_back(static_cast<int>(k));
    }
    return out;
}

Coefficients step1_varying_selection(const Dataset& data, const BasisSpec& spec,
                                     const LoadingVector& beta, double lambda1,
                                     const std::vector<double>& weights, const SolverConfig& config) {
    SelectionProblem problem(data, spec, beta, GroupLayout::varying_selection(data.p(), spec.size()));
    const Coefficients start = unpenalized_fit(data, spec, beta, config);
    const auto result = problem.solve(lambda1, weights, config.tau,
                                      problem.design().to_orthonormal(start.flat()), config);
    return problem.coefficients(result);
}

Coefficients step2_constant_selection(const Dataset& data, const BasisSpec& spec,
                                      const LoadingVector& beta, const Coefficients& gamma1,
                                      double lambda2, const std::vector<double>& weights,
                                      const SolverConfig& config) {
    SelectionProblem problem(
        data, spec, beta,
        GroupLayout::constant_selection(data.p(), spec.size(), varying_set(gamma1)));
    const auto result = problem.solve(lambda2, weights, config.tau,
                                      problem.design().to_orthonormal(gamma1.flat()), config);
    return problem.coefficients(result);
}

LoadingVector step3_beta_update(const Dataset& data, const BasisSpec& spec,
                                const Coefficients& gamma2, double lambda3,
                                const std::vector<double>& weights, const LoadingVector& beta_start,
                                const SolverConfig& config) {
    BetaProblem problem(data, spec, gamma2);
    return problem.solve(lambda3, weights, config.tau, beta_start, config).beta;
}

}  // namespace vmicm
