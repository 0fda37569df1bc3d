#include <doctest.h>

#include <cmath>

#include "support.hpp"
#include "vmicm/error.hpp"
#include "vmicm/steps.hpp"
#include "vmicm/tuning.hpp"

using namespace vmicm;

namespace {

// y depends on the index only through the intercept and gene 1.
Dataset small_dataset(RandomStream& rng, Eigen::Index n, Eigen::Index p, double noise) {
    const Eigen::MatrixXd x = testing::uniform_matrix(n, 2, rng);
    const Eigen::MatrixXd genes = testing::normal_matrix(n, p, rng);
    Eigen::VectorXd y(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double u = (x(i, 0) + x(i, 1)) / std::sqrt(2.0);
        y[i] = std::sin(2.0 * u) + (1.0 + u * u) * genes(i, 0) + noise * rng.normal();
    }
    return make_dataset(std::move(y), x, genes);
}

}  // namespace

TEST_CASE("lambda grid is geometric with 100 points ending at 1e-3") {
    const LambdaGrid grid = build_grid(7.5);
    REQUIRE(grid.values.size() == 100);
    CHECK(grid.values.front() == doctest::Approx(7.5).epsilon(1e-14));
    CHECK(grid.values.back() == doctest::Approx(1e-3).epsilon(1e-14));
    CHECK_FALSE(grid.degenerate);
    const double ratio = grid.values[1] / grid.values[0];
    for (std::size_t i = 1; i < grid.values.size(); ++i) {
        CHECK(grid.values[i] < grid.values[i - 1]);
        CHECK(std::abs(grid.values[i] / grid.values[i - 1] - ratio) < 1e-12);
    }
    CHECK(ratio == doctest::Approx(std::pow(1e-3 / 7.5, 1.0 / 99.0)));

    const LambdaGrid flat = build_grid(5e-4);
    CHECK(flat.degenerate);
    CHECK(flat.values == std::vector<double>{1e-3});
    CHECK_THROWS_AS(build_grid(1.0, 0), ParameterError);
}

TEST_CASE("bic arithmetic") {
    CHECK(bic_value(2.0, 100, 0) == doctest::Approx(std::log(2.0)));
    CHECK(std::abs(bic_value(3.5, 500, 7) - (std::log(3.5) + std::log(500.0) / 500.0 * 7.0)) < 1e-15);
}

TEST_CASE("adaptive weights invert magnitudes with a cap") {
    CHECK(adaptive_weight(0.5, 1e8) == 2.0);
    CHECK(adaptive_weight(0.0, 1e8) == 1e8);
    CHECK(adaptive_weight(1e-12, 1e8) == 1e8);

    Coefficients coef = Coefficients::zeros(3, 4);
    coef.genes[1].constant = 3.0;
    coef.genes[1].varying << 4.0, 0.0, 0.0;
    coef.genes[2].constant = 0.25;
    const auto w1 = adaptive_weights_from_unpenalized(coef);
    REQUIRE(w1.size() == 3);
    CHECK(w1[0] == doctest::Approx(0.2));
    CHECK(w1[1] == doctest::Approx(4.0));
    CHECK(w1[2] == 1e8);
    // lambda_1k * ‖gamma_k‖ recovers lambda_1
    CHECK(0.37 * w1[0] * 5.0 == doctest::Approx(0.37));

    const auto w2 = adaptive_weights_step2(coef);
    CHECK(w2[0] == doctest::Approx(1.0 / 3.0));
    CHECK(w2[1] == doctest::Approx(4.0));

    Eigen::VectorXd b(3);
    b << 0.6, 0.0, -0.8;
    const auto w3 = adaptive_weights_step3(LoadingVector(b));
    CHECK(w3[0] == 1.0);
    CHECK(w3[1] == 1e8);
    CHECK(w3[2] == doctest::Approx(1.25));
}

TEST_CASE("lambda max of a single orthonormal group is the norm of its projection") {
    RandomStream rng(51, 0);
    for (int trial = 0; trial < 10; ++trial) {
        const Eigen::Index n = 30;
        const Eigen::MatrixXd raw = testing::normal_matrix(n, 3, rng);
        const Eigen::MatrixXd q = raw.householderQr().householderQ() * Eigen::MatrixXd::Identity(n, 3);
        const Eigen::VectorXd y = testing::normal_matrix(n, 1, rng).col(0);
        GroupLayout layout;
        layout.total_columns = 3;
        GroupSpec group;
        group.penalized = true;
        group.columns = {0, 1, 2};
        layout.groups.push_back(group);
        const double weight = rng.uniform(0.5, 2.0);
        const double lmax = lambda_max_for_layout(y, q, layout, {weight}, 3.0);
        CHECK(lmax == doctest::Approx((q.transpose() * y).norm() / weight).epsilon(1e-10));
    }
}

TEST_CASE("selection path traces recompute their bic") {
    RandomStream rng(52, 0);
    const Dataset data = small_dataset(rng, 120, 4, 0.3);
    const LoadingVector beta = initial_beta(data, 1e-8);
    const BasisSpec spec = anchored_basis(data, beta, 2, 3);
    const SolverConfig config;
    const SelectionProblem problem(data, spec, beta, GroupLayout::varying_selection(data.p(), spec.size()));
    const std::vector<double> weights(4, 1.0);
    const double lmax = problem.lambda_max(weights, config.tau, config);
    const LambdaGrid grid = build_grid(lmax, 12);
    const GammaSelection sel = select_on_path(problem, weights, grid.values, config.tau, 0, config, 1e-20);
    REQUIRE(sel.trace.rows.size() == grid.values.size());
    CHECK(sel.trace.rows.front().df == 0);
    for (const auto& row : sel.trace.rows) {
        CHECK(std::abs(row.bic - (std::log(row.rss) + std::log(120.0) / 120.0 * row.df)) < 1e-12);
        CHECK(row.df >= 0);
        CHECK(row.df <= 4 * (spec.size() - 1));
    }
    // the argmin is the first row attaining the minimum
    const auto& rows = sel.trace.rows;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (i < sel.trace.argmin) CHECK(rows[i].bic > rows[sel.trace.argmin].bic);
        else CHECK(rows[i].bic >= rows[sel.trace.argmin].bic);
    }
    CHECK(sel.lambda == rows[sel.trace.argmin].lambda);
    // gene 1 is the only active gene in the truth
    CHECK(varying_set(sel.gamma) == std::vector<int>{1});
}

TEST_CASE("knot search covers the grid and scores each candidate") {
    RandomStream rng(53, 0);
    const Eigen::Index n = 500;
    const Eigen::MatrixXd x = testing::uniform_matrix(n, 2, rng);
    Eigen::VectorXd y(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double u = x(i, 0);
        y[i] = 4.0 * u * u * u - 3.0 * u + 0.1 * rng.normal();
    }
    const Dataset data = make_dataset(y, x, Eigen::MatrixXd(n, 0));
    const LoadingVector beta = LoadingVector::unit(2);
    const KnotSelection sel = select_knots_order(data, beta, TuningConfig{}, SolverConfig{});
    CHECK(sel.candidates.size() == 15);

    // hand computation for one candidate with an independent solver
    const auto& c = sel.candidates[4];
    const Eigen::VectorXd u = x.col(0);
    const BasisSpec spec = make_basis(u.minCoeff(), u.maxCoeff(), c.knots, c.order);
    Eigen::MatrixXd b(n, spec.size());
    for (Eigen::Index i = 0; i < n; ++i) b.row(i) = eval_basis(spec, u[i]).raw.transpose();
    const Eigen::VectorXd fit = b * b.colPivHouseholderQr().solve(y);
    const double rss = (y - fit).squaredNorm();
    CHECK(c.rss == doctest::Approx(rss).epsilon(1e-6));
    CHECK(std::abs(c.criterion - (std::log(c.rss) + std::log(500.0) / 500.0 * (c.knots + c.order))) < 1e-12);

    double best = sel.candidates.front().criterion;
    for (const auto& cand : sel.candidates) best = std::min(best, cand.criterion);
    bool found = false;
    for (const auto& cand : sel.candidates) {
        if (cand.knots == sel.knots && cand.order == sel.order) found = cand.criterion == best;
    }
    CHECK(found);

    TuningConfig fixed;
    fixed.knots = 3;
    fixed.order = 2;
    const KnotSelection one = select_knots_order(data, beta, fixed, SolverConfig{});
    CHECK(one.candidates.size() == 1);
    CHECK(one.knots == 3);
    CHECK(one.order == 2);
}

TEST_CASE("a cubic intercept function mostly selects cubic splines") {
    RandomStream rng(54, 0);
    int cubic = 0;
    for (int rep = 0; rep < 15; ++rep) {
        const Eigen::Index n = 500;
        const Eigen::MatrixXd x = testing::uniform_matrix(n, 2, rng);
        Eigen::VectorXd y(n);
        for (Eigen::Index i = 0; i < n; ++i) {
            const double u = x(i, 0) - 0.5;
            y[i] = 40.0 * u * u * u - 2.0 * u + 0.5 * rng.normal();
        }
        const Dataset data = make_dataset(y, x, Eigen::MatrixXd(n, 0));
        const KnotSelection sel = select_knots_order(data, LoadingVector::unit(2), TuningConfig{}, SolverConfig{});
        if (sel.order == 4) ++cubic;
    }
    CHECK(cubic > 7);
}

TEST_CASE("tuning configuration validation") {
    TuningConfig t;
    CHECK_NOTHROW(t.validate());
    t.grid_size = 0;
    CHECK_THROWS_AS(t.validate(), ParameterError);
    t = TuningConfig{};
    t.order = 5;
    CHECK_THROWS_AS(t.validate(), ParameterError);
}
