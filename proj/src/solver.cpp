#include "vmicm/solver.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <vector>
#include <string>

#include "vmicm/beta_update.hpp"
#include "vmicm/error.hpp"

namespace vmicm {
namespace {

void finish(FittedModel& model, const Dataset& data) {
    model.classification = FunctionClassification::from_coefficients(model.coef, model.beta);
    std::size_t clamped = 0;
    const Eigen::VectorXd fitted =
        fitted_values(index_values(data, model.beta), data.g, model.spec, model.coef, &clamped);
    model.diagnostics.rss = (data.y - fitted).squaredNorm();
    if (clamped > 0) {
        model.diagnostics.warnings.push_back(std::to_string(clamped) +
                                             " index values clamped to the basis domain");
    }
    if (std::abs(model.beta[0]) < 1e-8) {
        model.diagnostics.degenerate_beta = true;
        model.diagnostics.warnings.push_back("first loading converged to zero");
    }
}

// Geometric-tail extrapolation of a linearly converging loading sequence.
// After three consecutive iterates with a stable zero pattern, the observed
// contraction rate rho extends the last step by rho / (1 - rho).
class TailExtrapolator {
public:
    void reset() { history_.clear(); }

    // Records an iterate; returns an extrapolated point when one is warranted.
    std::optional<LoadingVector> push(const LoadingVector& beta, bool pattern_stable) {
        if (!pattern_stable) history_.clear();
        history_.push_back(beta.values());
        if (history_.size() < 3) return std::nullopt;
        const Eigen::VectorXd r1 = history_[1] - history_[0];
        const Eigen::VectorXd r2 = history_[2] - history_[1];
        history_.erase(history_.begin());
        const double denom = r1.squaredNorm();
        if (!(denom > 0.0)) return std::nullopt;
        const double rho = r2.dot(r1) / denom;
        if (!(rho > 0.05 && rho < 0.95)) return std::nullopt;
        // the last two steps must point the same way
        if ((r2 - rho * r1).norm() > 0.5 * r2.norm()) return std::nullopt;
        history_.clear();
        return LoadingVector::normalized(beta.values() + rho / (1.0 - rho) * r2);
    }

private:
    std::vector<Eigen::VectorXd> history_;
};

}  // namespace

FittedModel fit(const Dataset& data, const SolverConfig& config, const TuningConfig& tuning) {
    data.validate();
    config.validate();
    tuning.validate();

    const LoadingVector beta0 = initial_beta(data, config.ridge_eps);
    const KnotSelection knots = select_knots_order(data, beta0, tuning, config);

    FittedModel model;
    model.tuning.knots = knots.knots;
    model.tuning.order = knots.order;
    LoadingVector beta = beta0;
    LoadingVector previous = beta0;
    TailExtrapolator extrapolator;
    FunctionClassification last_pattern;
    int since_jump = 0;

    for (int outer = 1; outer <= config.max_outer_iter; ++outer) {
        const BasisSpec spec = anchored_basis(data, beta, knots.knots, knots.order);
        const GammaSelection step1 = select_lambda1(data, spec, beta, tuning, config);
        const GammaSelection step2 = select_lambda2(data, spec, beta, step1.gamma, tuning, config);
        const BetaSelection step3 = select_lambda3(data, spec, step2.gamma, beta, tuning, config);

        const double change = (step3.beta.values() - beta.values()).cwiseAbs().maxCoeff();
        const double back_two = (step3.beta.values() - previous.values()).cwiseAbs().maxCoeff();
        previous = beta;
        beta = step3.beta;
        model.beta = beta;
        model.spec = spec;
        model.coef = step2.gamma;
        model.tuning.lambda1 = step1.lambda;
        model.tuning.lambda2 = step2.lambda;
        model.tuning.lambda3 = step3.lambda;
        model.tuning.tau = step3.tau;
        model.diagnostics.outer_iterations = outer;
        if (change < config.outer_tol) {
            model.diagnostics.converged = true;
            break;
        }
        if (++since_jump > 2 && back_two < config.outer_tol) {
            model.diagnostics.warnings.push_back("outer iterations alternate between two loading vectors");
            break;
        }
        const auto pattern = FunctionClassification::from_coefficients(step2.gamma, step3.beta);
        const bool stable = outer > 1 && pattern.same_partition(last_pattern);
        last_pattern = pattern;
        if (auto jump = extrapolator.push(beta, stable)) {
            previous = beta;
            beta = *jump;
            since_jump = 0;
        }
    }
    finish(model, data);
    return model;
}

FittedModel oracle_fit(const Dataset& data, const BasisSpec& spec,
                       const FunctionClassification& truth, const std::vector<int>& beta_support,
                       const SolverConfig& config) {
    data.validate();
    config.validate();
    const Eigen::Index q = data.q();

    std::vector<bool> free(static_cast<std::size_t>(q), false);
    free[0] = true;
    for (int d : beta_support) {
        if (d < 0 || d >= q) throw ParameterError("beta support index out of range");
        free[static_cast<std::size_t>(d)] = true;
    }

    Eigen::VectorXd start = initial_beta(data, config.ridge_eps).values();
    for (Eigen::Index d = 0; d < q; ++d) {
        if (!free[static_cast<std::size_t>(d)]) start[d] = 0.0;
    }
    if (start.isZero(0.0)) start[0] = 1.0;
    LoadingVector beta = LoadingVector::normalized(start);

    FittedModel model;
    model.tuning.knots = spec.interior_knots;
    model.tuning.order = spec.order;
    model.tuning.tau = config.tau;
    const std::vector<double> unit_weights(static_cast<std::size_t>(q), 1.0);
    TailExtrapolator extrapolator;

    for (int outer = 1; outer <= config.max_outer_iter; ++outer) {
        const BasisSpec current = anchored_basis(data, beta, spec.interior_knots, spec.order);
        const Coefficients gamma = structured_fit(data, current, beta, truth, config);

        BetaProblem problem(data, current, gamma, free);
        const LoadingVector next = problem.solve(0.0, unit_weights, config.tau, beta, config).beta;
        const double change = (next.values() - beta.values()).cwiseAbs().maxCoeff();
        beta = next;
        model.beta = beta;
        model.spec = current;
        model.coef = gamma;
        model.diagnostics.outer_iterations = outer;
        if (change < config.outer_tol) {
            model.diagnostics.converged = true;
            break;
        }
        if (auto jump = extrapolator.push(beta, true)) beta = *jump;
    }
    finish(model, data);
    return model;
}

}  // namespace vmicm
