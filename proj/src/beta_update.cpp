#include "vmicm/beta_update.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "vmicm/error.hpp"
#include "vmicm/penalty.hpp"

namespace vmicm {

BetaProblem::BetaProblem(const Dataset& data, const BasisSpec& spec, const Coefficients& gamma,
                         std::vector<bool> free_mask)
    : y_(data.y), x_(data.x), spec_(spec), free_(std::move(free_mask)) {
    if (gamma.basis_size() != spec.size() ||
        static_cast<Eigen::Index>(gamma.genes.size()) != data.g.cols()) {
        throw ParameterError("coefficients do not match basis or gene count");
    }
    if (free_.empty()) free_.assign(static_cast<std::size_t>(data.q()), true);
    if (static_cast<Eigen::Index>(free_.size()) != data.q()) {
        throw ParameterError("free mask length differs from q");
    }
    if (!free_[0]) throw ParameterError("the first loading cannot be pinned");
    std::vector<Eigen::Index> cols;
    for (std::size_t k = 0; k < gamma.genes.size(); ++k) {
        if (!gamma.genes[k].is_zero()) {
            cols.push_back(static_cast<Eigen::Index>(k));
            active_.push_back(gamma.genes[k]);
        }
    }
    g_active_.resize(data.n(), static_cast<Eigen::Index>(cols.size()));
    for (std::size_t a = 0; a < cols.size(); ++a) {
        g_active_.col(static_cast<Eigen::Index>(a)) = data.g.col(cols[a]);
    }
}

BetaProblem::Linearization BetaProblem::linearize(const Eigen::VectorXd& beta) const {
    const Eigen::Index n = y_.size();
    const int L = spec_.size();
    const Eigen::VectorXd index = x_ * beta;
    Linearization lin;
    lin.residual.resize(n);
    lin.slope.resize(n);
    Eigen::VectorXd basis(L);
    Eigen::VectorXd deriv(L);
    for (Eigen::Index i = 0; i < n; ++i) {
        double u = index[i];
        clamp_to_domain(spec_, u);
        transformed_basis_into(spec_, u, basis);
        transformed_derivative_into(spec_, u, deriv);
        double fitted = 0.0;
        double slope = 0.0;
        for (std::size_t a = 0; a < active_.size(); ++a) {
            const double g = g_active_(i, static_cast<Eigen::Index>(a));
            if (g == 0.0) continue;
            const auto& gene = active_[a];
            fitted += g * (gene.constant + basis.tail(L - 1).dot(gene.varying));
            slope += g * deriv.tail(L - 1).dot(gene.varying);
        }
        lin.residual[i] = y_[i] - fitted;
        lin.slope[i] = slope;
    }
    return lin;
}

double BetaProblem::rss(const LoadingVector& beta) const {
    return linearize(beta.values()).residual.squaredNorm();
}

BetaUpdateResult BetaProblem::solve(double lambda, const std::vector<double>& weights, double tau,
                                    const LoadingVector& start, const SolverConfig& config) const {
    const Eigen::Index q = this->q();
    if (start.size() != q) throw ParameterError("start loading vector has the wrong length");
    if (static_cast<Eigen::Index>(weights.size()) != q) {
        throw ParameterError("loading weights must have length q");
    }
    std::vector<McpParams> penalties(static_cast<std::size_t>(q));
    for (Eigen::Index d = 1; d < q; ++d) {
        penalties[static_cast<std::size_t>(d)] = McpParams(lambda * weights[static_cast<std::size_t>(d)], tau);
    }

    Eigen::VectorXd current = start.values();
    for (Eigen::Index d = 1; d < q; ++d) {
        if (!free_[static_cast<std::size_t>(d)]) current[d] = 0.0;
    }
    if (current[0] == 0.0 && current.tail(q - 1).isZero(0.0)) current[0] = 1.0;
    current = LoadingVector::normalized(current).values();

    BetaUpdateResult best;
    double best_objective = std::numeric_limits<double>::infinity();
    BetaUpdateResult result;

    Eigen::MatrixXd pseudo(y_.size(), q);
    Eigen::VectorXd scales(q);
    for (int iter = 1; iter <= config.max_inner_iter; ++iter) {
        const Linearization lin = linearize(current);
        for (Eigen::Index d = 0; d < q; ++d) {
            pseudo.col(d) = lin.slope.cwiseProduct(x_.col(d));
            scales[d] = pseudo.col(d).norm();
        }

        // Objective at the linearization point, used to keep the best iterate.
        double objective = 0.5 * lin.residual.squaredNorm();
        for (Eigen::Index d = 1; d < q; ++d) {
            if (penalized(d)) {
                objective += mcp_value(scales[d] * std::abs(current[d]),
                                       penalties[static_cast<std::size_t>(d)]);
            }
        }
        if (objective < best_objective) {
            best_objective = objective;
            best.beta = LoadingVector(current);
            best.rss = lin.residual.squaredNorm();
            best.iterations = iter;
        }

        Eigen::VectorXd next = current;
        Eigen::VectorXd r = lin.residual;
        for (int sweep = 0; sweep < config.max_inner_iter; ++sweep) {
            double change = 0.0;
            for (Eigen::Index d = 0; d < q; ++d) {
                const double s = scales[d];
                if (s == 0.0) continue;
                double b;
                if (d > 0 && !free_[static_cast<std::size_t>(d)]) {
                    b = 0.0;
                } else {
                    const double z = pseudo.col(d).dot(r) / s + s * next[d];
                    b = d == 0 ? z : scalar_firm_threshold(z, penalties[static_cast<std::size_t>(d)]);
                }
                const double updated = b / s;
                const double delta = updated - next[d];
                if (delta != 0.0) {
                    r.noalias() -= pseudo.col(d) * delta;
                    next[d] = updated;
                    change = std::max(change, std::abs(delta) * s);
                }
            }
            if (change < config.inner_tol) break;
        }

        if (next.isZero(0.0)) {
            throw DegenerateUpdateError("loading update collapsed to the zero vector");
        }
        const Eigen::VectorXd normalized = LoadingVector::normalized(next).values();
        const double step = (normalized - current).cwiseAbs().maxCoeff();
        current = normalized;
        result.iterations = iter;
        if (step < config.inner_tol) {
            result.converged = true;
            break;
        }
    }

    if (!result.converged) {
        best.converged = false;
        return best;
    }
    result.beta = LoadingVector(current);
    result.rss = rss(result.beta);
    return result;
}

double BetaProblem::lambda_max(const std::vector<double>& weights, double tau,
                               const LoadingVector& start, const SolverConfig& config) const {
    const Eigen::Index q = this->q();
    bool any_penalized = false;
    for (Eigen::Index d = 1; d < q; ++d) any_penalized = any_penalized || penalized(d);
    if (!any_penalized) return 0.0;

    auto candidate_at = [&](const Eigen::VectorXd& beta) {
        const Linearization lin = linearize(beta);
        double c = 0.0;
        for (Eigen::Index d = 1; d < q; ++d) {
            if (!penalized(d)) continue;
            const Eigen::VectorXd column = lin.slope.cwiseProduct(x_.col(d));
            const double s = column.norm();
            if (s == 0.0) continue;
            const double z = column.dot(lin.residual) / s + s * beta[d];
            c = std::max(c, std::abs(z) / weights[static_cast<std::size_t>(d)]);
        }
        return c;
    };

    auto all_zero = [&](double lambda) {
        try {
            const auto fit = solve(lambda, weights, tau, start, config);
            for (Eigen::Index d = 1; d < q; ++d) {
                if (fit.beta[d] != 0.0) return false;
            }
            return true;
        } catch (const DegenerateUpdateError&) {
            return false;
        }
    };

    double hi = std::max(candidate_at(start.values()), candidate_at(LoadingVector::unit(q).values()));
    if (!(hi > 0.0)) return 0.0;
    double lo = 0.0;
    int guard = 0;
    while (!all_zero(hi)) {
        lo = hi;
        hi *= 2.0;
        if (++guard > 40) throw SolverError("could not bracket the loading lambda_max");
    }
    if (lo == 0.0) {
        // Look for a failing lower bracket.
        lo = hi;
        for (int i = 0; i < 10; ++i) {
            lo *= 0.5;
            if (!all_zero(lo)) break;
            hi = lo;
        }
        if (all_zero(lo)) return lo;
    }
    for (int i = 0; i < 12; ++i) {
        const double mid = 0.5 * (lo + hi);
        if (all_zero(mid)) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    return hi;
}

}  // namespace vmicm
