#include <doctest.h>

#include <cmath>

#include "support.hpp"
#include "vmicm/beta_update.hpp"
#include "vmicm/error.hpp"
#include "vmicm/steps.hpp"

using namespace vmicm;

namespace {

struct SplineTruth {
    Dataset data;
    LoadingVector beta;
    BasisSpec spec;
    Coefficients gamma;
};

// Noiseless data whose coefficient functions lie in the spline space.
SplineTruth spline_truth(RandomStream& rng, Eigen::Index n, Eigen::Index p, Eigen::Index q) {
    SplineTruth t;
    Eigen::VectorXd b = Eigen::VectorXd::Zero(q);
    b[0] = 0.8;
    b[1] = 0.6;
    t.beta = LoadingVector(b);
    const Eigen::MatrixXd x = testing::uniform_matrix(n, q, rng);
    const Eigen::MatrixXd genes = testing::normal_matrix(n, p, rng);
    const Eigen::VectorXd u = x * b;
    t.spec = make_basis(u.minCoeff(), u.maxCoeff(), 2, 4);
    t.gamma = Coefficients::zeros(p, t.spec.size());
    t.gamma.genes[0].constant = 1.0;
    t.gamma.genes[0].varying = 2.0 * testing::normal_matrix(t.spec.size() - 1, 1, rng).col(0);
    t.gamma.genes[1].constant = 0.5;
    t.gamma.genes[1].varying = 2.0 * testing::normal_matrix(t.spec.size() - 1, 1, rng).col(0);
    t.gamma.genes[2].constant = 2.0;
    Eigen::MatrixXd g(n, p + 1);
    g.col(0).setOnes();
    g.rightCols(p) = genes;
    const Eigen::VectorXd y = fitted_values(u, g, t.spec, t.gamma);
    t.data = make_dataset(y, x, genes);
    return t;
}

}  // namespace

TEST_CASE("initial loadings recover a linear working model exactly") {
    RandomStream rng(61, 0);
    for (int trial = 0; trial < 10; ++trial) {
        const Eigen::Index n = 80, p = 3, q = 4;
        Eigen::VectorXd b = testing::normal_matrix(q, 1, rng).col(0);
        b[0] = std::abs(b[0]) + 0.1;
        const LoadingVector beta = LoadingVector::normalized(b);
        const Eigen::MatrixXd x = testing::uniform_matrix(n, q, rng);
        const Eigen::MatrixXd genes = testing::normal_matrix(n, p, rng);
        const Eigen::VectorXd u = x * beta.values();
        Eigen::VectorXd y = Eigen::VectorXd::Constant(n, 0.3) + 1.5 * u;
        for (Eigen::Index k = 0; k < p; ++k) {
            y += genes.col(k).cwiseProduct(((k + 1.0) * 0.4 + (1.0 - k) * u.array()).matrix());
        }
        const LoadingVector est = initial_beta(make_dataset(y, x, genes), 0.0);
        CHECK((est.values() - beta.values()).norm() < 1e-8);
        CHECK(est.values().norm() == doctest::Approx(1.0).epsilon(1e-14));
        CHECK(est[0] > 0.0);
    }
}

TEST_CASE("unpenalized and structured fits are least squares solutions") {
    RandomStream rng(62, 0);
    const auto t = spline_truth(rng, 150, 4, 3);
    SolverConfig config;
    config.ridge_eps = 0.0;
    const Coefficients full = unpenalized_fit(t.data, t.spec, t.beta, config);
    CHECK((full.flat() - t.gamma.flat()).norm() < 1e-7);

    FunctionClassification structure;
    structure.varying = {1};
    structure.constant = {2};
    structure.zero = {3, 4};
    const Coefficients restricted = structured_fit(t.data, t.spec, t.beta, structure, config);
    CHECK((restricted.flat() - t.gamma.flat()).norm() < 1e-7);
    CHECK(restricted.genes[2].varying_is_zero());
    CHECK(restricted.genes[3].is_zero());

    // perturb the response and compare with an independent solver on the
    // restricted columns
    Dataset noisy = t.data;
    noisy.y += 0.1 * testing::normal_matrix(noisy.n(), 1, rng).col(0);
    const Coefficients fit = structured_fit(noisy, t.spec, t.beta, structure, config);
    const Eigen::MatrixXd w = design_matrix(noisy, t.spec, t.beta);
    const int L = t.spec.size();
    std::vector<Eigen::Index> cols;
    for (int j = 0; j < 2 * L; ++j) cols.push_back(j);
    cols.push_back(2 * L);
    Eigen::MatrixXd sub(w.rows(), static_cast<Eigen::Index>(cols.size()));
    for (std::size_t j = 0; j < cols.size(); ++j) sub.col(static_cast<Eigen::Index>(j)) = w.col(cols[j]);
    const Eigen::VectorXd ls = sub.colPivHouseholderQr().solve(noisy.y);
    const Eigen::VectorXd flat = fit.flat();
    for (std::size_t j = 0; j < cols.size(); ++j) {
        CHECK(flat[cols[j]] == doctest::Approx(ls[static_cast<Eigen::Index>(j)]).epsilon(1e-7));
    }
}

TEST_CASE("varying selection keeps the true varying gene") {
    RandomStream rng(63, 0);
    const auto t = spline_truth(rng, 200, 5, 3);
    SolverConfig config;
    const std::vector<double> weights(5, 1.0);
    const Coefficients huge = step1_varying_selection(t.data, t.spec, t.beta, 1e6, weights, config);
    CHECK(varying_set(huge).empty());
    const Coefficients small = step1_varying_selection(t.data, t.spec, t.beta, 1e-3, weights, config);
    CHECK(varying_set(small) == std::vector<int>{1});
    const Coefficients constants =
        step2_constant_selection(t.data, t.spec, t.beta, small, 1e-3, weights, config);
    CHECK(constants.genes[2].constant == doctest::Approx(2.0).epsilon(1e-4));
    CHECK(constants.genes[3].constant == 0.0);
}

TEST_CASE("loading update recovers the truth with fixed functions") {
    RandomStream rng(64, 0);
    for (int trial = 0; trial < 5; ++trial) {
        const auto t = spline_truth(rng, 200, 3, 4);
        const BetaProblem problem(t.data, t.spec, t.gamma);
        CHECK(problem.rss(t.beta) < 1e-20);
        Eigen::VectorXd start = t.beta.values();
        start[1] -= 0.05;
        start[2] += 0.03;
        SolverConfig config;
        config.outer_tol = 1e-12;
        config.inner_tol = 1e-12;
        const std::vector<double> weights(4, 1.0);
        const BetaUpdateResult result =
            problem.solve(0.0, weights, config.tau, LoadingVector::normalized(start), config);
        CHECK((result.beta.values() - t.beta.values()).norm() < 1e-6);
        CHECK(result.beta.values().norm() == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(result.beta[0] > 0.0);
    }
}

TEST_CASE("loading update at lambda max returns the first unit vector") {
    RandomStream rng(65, 0);
    const auto t = spline_truth(rng, 150, 3, 4);
    const BetaProblem problem(t.data, t.spec, t.gamma);
    const SolverConfig config;
    const std::vector<double> weights(4, 1.0);
    const double lmax = problem.lambda_max(weights, config.tau, t.beta, config);
    REQUIRE(lmax > 0.0);
    const BetaUpdateResult at = problem.solve(lmax * 1.001, weights, config.tau, t.beta, config);
    CHECK((at.beta.values() - LoadingVector::unit(4).values()).norm() < 1e-12);
    const BetaUpdateResult below = problem.solve(0.5 * lmax, weights, config.tau, t.beta, config);
    CHECK((below.beta.values().tail(3).array() != 0.0).any());
}

TEST_CASE("pinned loadings stay at zero") {
    RandomStream rng(66, 0);
    const auto t = spline_truth(rng, 150, 3, 4);
    const BetaProblem problem(t.data, t.spec, t.gamma, {true, true, false, false});
    const std::vector<double> weights(4, 1.0);
    const auto result = problem.solve(0.0, weights, 3.0, t.beta, SolverConfig{});
    CHECK(result.beta[2] == 0.0);
    CHECK(result.beta[3] == 0.0);
    CHECK((result.beta.values() - t.beta.values()).norm() < 1e-6);
}
