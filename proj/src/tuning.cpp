#include "vmicm/tuning.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "vmicm/error.hpp"

namespace vmicm {
namespace {

std::vector<double> tau_values(const TuningConfig& tuning, const SolverConfig& config) {
    if (tuning.tau_grid.empty()) return {config.tau};
    return tuning.tau_grid;
}

double floored_rss(double rss, double y_energy, double rss_floor) {
    return std::max(rss, rss_floor * y_energy);
}

// Keeps the first minimum in grid order, so ties resolve to the larger lambda.
void update_argmin(BicTrace& trace) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < trace.rows.size(); ++i) {
        if (trace.rows[i].bic < best) {
            best = trace.rows[i].bic;
            trace.argmin = i;
        }
    }
}

}  // namespace

void TuningConfig::validate() const {
    if (smoothness < 2) throw ParameterError("smoothness r must be >= 2");
    if (knots && *knots < 1) throw ParameterError("knot count must be >= 1");
    if (order && (*order < 2 || *order > 4)) throw ParameterError("order must be 2, 3 or 4");
    if (grid_size < 1) throw ParameterError("grid size must be >= 1");
    if (!(lambda_min > 0.0)) throw ParameterError("lambda_min must be > 0");
    for (double tau : tau_grid) {
        if (!(tau > 1.0)) throw ParameterError("tau grid values must be > 1");
    }
    if (!(weight_cap > 0.0)) throw ParameterError("weight cap must be > 0");
}

LambdaGrid build_grid(double lambda_max, int count, double lambda_min) {
    if (count < 1) throw ParameterError("grid needs at least one point");
    LambdaGrid grid;
    grid.lambda_min = lambda_min;
    if (!(lambda_max > lambda_min)) {
        grid.degenerate = true;
        grid.lambda_max = lambda_min;
        grid.values = {lambda_min};
        return grid;
    }
    grid.lambda_max = lambda_max;
    grid.values.resize(static_cast<std::size_t>(count));
    if (count == 1) {
        grid.values[0] = lambda_max;
        return grid;
    }
    const double log_max = std::log(lambda_max);
    const double log_min = std::log(lambda_min);
    for (int i = 0; i < count; ++i) {
        const double t = static_cast<double>(i) / (count - 1);
        grid.values[static_cast<std::size_t>(i)] = std::exp(log_max + t * (log_min - log_max));
    }
    grid.values.front() = lambda_max;
    grid.values.back() = lambda_min;
    return grid;
}

double bic_value(double rss, Eigen::Index n, int df) {
    const double dn = static_cast<double>(n);
    return std::log(rss) + std::log(dn) / dn * df;
}

double adaptive_weight(double magnitude, double cap) {
    if (!(magnitude > 0.0)) return cap;
    return std::min(1.0 / magnitude, cap);
}

std::vector<double> adaptive_weights_from_unpenalized(const Coefficients& unpenalized, double cap) {
    std::vector<double> weights;
    for (std::size_t k = 1; k < unpenalized.genes.size(); ++k) {
        const auto& gene = unpenalized.genes[k];
        const double norm = std::sqrt(gene.constant * gene.constant + gene.varying.squaredNorm());
        weights.push_back(adaptive_weight(norm, cap));
    }
    return weights;
}

std::vector<double> adaptive_weights_step1(const Dataset& data, const BasisSpec& spec,
                                           const LoadingVector& beta, const SolverConfig& config,
                                           double cap) {
    return adaptive_weights_from_unpenalized(unpenalized_fit(data, spec, beta, config), cap);
}

std::vector<double> adaptive_weights_step2(const Coefficients& gamma1, double cap) {
    std::vector<double> weights;
    for (std::size_t k = 1; k < gamma1.genes.size(); ++k) {
        weights.push_back(adaptive_weight(std::abs(gamma1.genes[k].constant), cap));
    }
    return weights;
}

std::vector<double> adaptive_weights_step3(const LoadingVector& unpenalized, double cap) {
    std::vector<double> weights(static_cast<std::size_t>(unpenalized.size()), 1.0);
    for (Eigen::Index d = 1; d < unpenalized.size(); ++d) {
        weights[static_cast<std::size_t>(d)] = adaptive_weight(std::abs(unpenalized[d]), cap);
    }
    return weights;
}

double lambda_max_for_layout(const Eigen::VectorXd& y, const Eigen::MatrixXd& w,
                             const GroupLayout& layout, const std::vector<double>& weights,
                             double tau, const SolverConfig& config) {
    GroupLayout numbered = layout;
    int next = 0;
    for (auto& group : numbered.groups) {
        if (group.penalized) group.gene = ++next;
    }
    if (static_cast<int>(weights.size()) != next) {
        throw ParameterError("need one weight per penalized group");
    }
    SelectionProblem problem(y, w, numbered, next, 1);
    return problem.lambda_max(weights, tau, config);
}

GammaSelection select_on_path(const SelectionProblem& problem, const std::vector<double>& weights,
                              const std::vector<double>& grid, double tau, int df_offset,
                              const SolverConfig& config, double rss_floor) {
    GammaSelection out;
    out.tau = tau;
    out.weights = weights;
    const double y_energy = problem.y().squaredNorm();
    const Eigen::Index n = problem.y().size();
    auto start = problem.null_start(config);
    std::vector<DescentResult> kept;
    for (double lambda : grid) {
        try {
            DescentResult result = problem.solve(lambda, weights, tau, start, config);
            BicRecord row;
            row.lambda = lambda;
            row.tau = tau;
            row.rss = floored_rss(result.residual.squaredNorm(), y_energy, rss_floor);
            row.df = problem.nonzero_penalized_coefficients(result) + df_offset;
            row.bic = bic_value(row.rss, n, row.df);
            start = result.orthonormal;
            out.trace.rows.push_back(row);
            kept.push_back(std::move(result));
        } catch (const SolverError&) {
            ++out.trace.skipped;
        }
    }
    if (out.trace.rows.empty()) throw TuningError("every grid point failed to solve");
    update_argmin(out.trace);
    out.lambda = out.trace.rows[out.trace.argmin].lambda;
    out.gamma = problem.coefficients(kept[out.trace.argmin]);
    return out;
}

namespace {

// Adaptive weights from the magnitude of each penalized block in the
// orthonormal coordinates of `problem`, divided by sqrt(n).
std::vector<double> design_scaled_weights(const SelectionProblem& problem,
                                          const Coefficients& estimate, double cap) {
    const auto b = problem.design().to_orthonormal(estimate.flat());
    const auto& blocks = problem.design().blocks();
    const double root_n = std::sqrt(static_cast<double>(problem.y().size()));
    std::vector<double> weights(static_cast<std::size_t>(problem.p()), cap);
    for (std::size_t m = 0; m < blocks.size(); ++m) {
        if (!blocks[m].penalized) continue;
        weights[static_cast<std::size_t>(blocks[m].gene - 1)] = adaptive_weight(b[m].norm() / root_n, cap);
    }
    return weights;
}

// Adaptive weights from the marginal fit of each penalized block: its
// orthonormal basis is already orthogonal to the unpenalized columns.
std::vector<double> marginal_weights(const SelectionProblem& problem, double cap) {
    const auto& blocks = problem.design().blocks();
    const double root_n = std::sqrt(static_cast<double>(problem.y().size()));
    std::vector<double> weights(static_cast<std::size_t>(problem.p()), cap);
    for (const auto& block : blocks) {
        if (!block.penalized) continue;
        const double magnitude = (block.q.transpose() * problem.y()).norm() / root_n;
        weights[static_cast<std::size_t>(block.gene - 1)] = adaptive_weight(magnitude, cap);
    }
    return weights;
}

GammaSelection select_over_tau(const SelectionProblem& problem, const std::vector<double>& weights,
                               int df_offset, const TuningConfig& tuning,
                               const SolverConfig& config) {
    std::optional<GammaSelection> best;
    for (double tau : tau_values(tuning, config)) {
        const double lambda_max = problem.lambda_max(weights, tau, config);
        const LambdaGrid grid = build_grid(lambda_max, tuning.grid_size, tuning.lambda_min);
        GammaSelection candidate =
            select_on_path(problem, weights, grid.values, tau, df_offset, config, tuning.rss_floor);
        if (!best || candidate.trace.rows[candidate.trace.argmin].bic <
                         best->trace.rows[best->trace.argmin].bic) {
            best = std::move(candidate);
        }
    }
    return std::move(*best);
}

}  // namespace

GammaSelection select_lambda1(const Dataset& data, const BasisSpec& spec, const LoadingVector& beta,
                              const TuningConfig& tuning, const SolverConfig& config) {
    SelectionProblem problem(data, spec, beta, GroupLayout::varying_selection(data.p(), spec.size()));
    const auto weights = marginal_weights(problem, tuning.weight_cap);
    return select_over_tau(problem, weights, 0, tuning, config);
}

GammaSelection select_lambda2(const Dataset& data, const BasisSpec& spec, const LoadingVector& beta,
                              const Coefficients& gamma1, const TuningConfig& tuning,
                              const SolverConfig& config) {
    const auto varying = varying_set(gamma1);
    SelectionProblem problem(data, spec, beta,
                             GroupLayout::constant_selection(data.p(), spec.size(), varying));
    const auto weights = design_scaled_weights(problem, gamma1, tuning.weight_cap);
    return select_over_tau(problem, weights, 0, tuning, config);
}

BetaSelection select_beta_on_path(const BetaProblem& problem, const std::vector<double>& weights,
                                  const std::vector<double>& grid, double tau,
                                  const LoadingVector& beta_start, const SolverConfig& config,
                                  double rss_floor, const RssFunction& rss_of) {
    BetaSelection out;
    out.tau = tau;
    out.weights = weights;
    std::vector<LoadingVector> kept;
    for (double lambda : grid) {
        try {
            const BetaUpdateResult result = problem.solve(lambda, weights, tau, beta_start, config);
            BicRecord row;
            row.lambda = lambda;
            row.tau = tau;
            const double rss = rss_of ? rss_of(result.beta) : problem.rss(result.beta);
            row.rss = floored_rss(rss, problem.response_energy(), rss_floor);
            row.df = 0;
            for (Eigen::Index d = 0; d < result.beta.size(); ++d) {
                if (result.beta[d] != 0.0) ++row.df;
            }
            row.bic = bic_value(row.rss, problem.rows(), row.df);
            out.trace.rows.push_back(row);
            kept.push_back(result.beta);
        } catch (const SolverError&) {
            ++out.trace.skipped;
        }
    }
    if (out.trace.rows.empty()) throw TuningError("every loading grid point failed to solve");
    update_argmin(out.trace);
    out.lambda = out.trace.rows[out.trace.argmin].lambda;
    out.beta = kept[out.trace.argmin];
    return out;
}

BetaSelection select_lambda3(const Dataset& data, const BasisSpec& spec, const Coefficients& gamma2,
                             const LoadingVector& beta_start, const TuningConfig& tuning,
                             const SolverConfig& config) {
    BetaProblem problem(data, spec, gamma2);
    const std::vector<double> unit_weights(static_cast<std::size_t>(data.q()), 1.0);
    const LoadingVector unpenalized = problem.solve(0.0, unit_weights, config.tau, beta_start, config).beta;
    const auto weights = adaptive_weights_step3(unpenalized, tuning.weight_cap);

    // Each path point is scored with the coefficients refitted at its own
    // loadings on the Step 2 structure.
    const FunctionClassification structure = FunctionClassification::from_coefficients(gamma2, beta_start);
    Eigen::VectorXd cached_beta;
    double cached_rss = 0.0;
    const RssFunction profile = [&](const LoadingVector& beta) {
        if (cached_beta.size() != beta.size() || cached_beta != beta.values()) {
            cached_beta = beta.values();
            cached_rss = structured_rss(data, beta, spec.interior_knots, spec.order, structure, config);
        }
        return cached_rss;
    };

    std::optional<BetaSelection> best;
    for (double tau : tau_values(tuning, config)) {
        const double lambda_max = problem.lambda_max(weights, tau, beta_start, config);
        const LambdaGrid grid = build_grid(lambda_max, tuning.grid_size, tuning.lambda_min);
        BetaSelection candidate = select_beta_on_path(problem, weights, grid.values, tau, beta_start,
                                                      config, tuning.rss_floor, profile);
        if (!best || candidate.trace.rows[candidate.trace.argmin].bic <
                         best->trace.rows[best->trace.argmin].bic) {
            best = std::move(candidate);
        }
    }
    return std::move(*best);
}

KnotSelection select_knots_order(const Dataset& data, const LoadingVector& beta0,
                                 const TuningConfig& tuning, const SolverConfig& config) {
    const KnotOrderGrid grid = knot_order_grid(static_cast<int>(data.n()), tuning.smoothness);
    std::vector<int> knot_values;
    if (tuning.knots) {
        knot_values.push_back(*tuning.knots);
    } else {
        for (int k = grid.min_knots; k <= grid.max_knots; ++k) knot_values.push_back(k);
    }
    std::vector<int> orders;
    if (tuning.order) {
        orders.push_back(*tuning.order);
    } else {
        orders.assign(grid.orders.begin(), grid.orders.end());
    }
    const Eigen::VectorXd index = index_values(data, beta0);
    const Eigen::MatrixXd ones = Eigen::MatrixXd::Ones(data.n(), 1);

    // Remove the gene terms of the linear working model so the intercept
    // function is scored against a response free of the other effects.
    const Eigen::Index genes = data.g.cols();
    Eigen::MatrixXd paired(data.n(), 2 * genes);
    paired.leftCols(genes) = data.g;
    paired.rightCols(genes) = index.asDiagonal() * data.g;
    const Eigen::VectorXd ab = ridge_least_squares(paired, data.y, config.ridge_eps);
    Eigen::VectorXd target = data.y;
    for (Eigen::Index k = 1; k < genes; ++k) {
        target -= data.g.col(k).cwiseProduct((ab[k] + ab[genes + k] * index.array()).matrix());
    }
    const double n = static_cast<double>(data.n());

    KnotSelection out;
    double best = std::numeric_limits<double>::infinity();
    for (int knots : knot_values) {
        for (int order : orders) {
            const BasisSpec spec = make_basis(index.minCoeff(), index.maxCoeff(), knots, order);
            const Eigen::MatrixXd w = design_matrix_at(index, ones, spec);
            const Eigen::VectorXd coef = ridge_least_squares(w, target, config.ridge_eps);
            KnotCandidate c;
            c.knots = knots;
            c.order = order;
            c.rss = (target - w * coef).squaredNorm();
            c.criterion = std::log(c.rss) + std::log(n) / n * (knots + order);
            out.candidates.push_back(c);
            if (c.criterion < best) {
                best = c.criterion;
                out.knots = knots;
                out.order = order;
            }
        }
    }
    return out;
}

}  // namespace vmicm
