#include <doctest.h>

#include <cmath>

#include "support.hpp"
#include "vmicm/error.hpp"
#include "vmicm/model.hpp"

using namespace vmicm;

namespace {

FittedModel random_fit(RandomStream& rng, Eigen::Index p, Eigen::Index q, const BasisSpec& spec) {
    FittedModel fit;
    fit.spec = spec;
    fit.beta = LoadingVector::normalized(testing::normal_matrix(q, 1, rng).col(0).cwiseAbs());
    fit.coef = Coefficients::from_flat(testing::normal_matrix(spec.size() * (p + 1), 1, rng).col(0), p,
                                       spec.size());
    return fit;
}

}  // namespace

TEST_CASE("phi reparametrization examples") {
    CHECK(beta_to_phi(LoadingVector::unit(3)).isZero(0.0));
    const double r = 1.0 / std::sqrt(2.0);
    Eigen::VectorXd b(5);
    b << r, r, 0, 0, 0;
    const Eigen::VectorXd phi = beta_to_phi(LoadingVector::normalized(b));
    CHECK(phi[0] == doctest::Approx(r));
    CHECK(phi.tail(3).isZero(0.0));

    CHECK((phi_to_beta(Eigen::VectorXd::Zero(4)).values() - LoadingVector::unit(5).values()).norm() == 0.0);
    Eigen::VectorXd phi2(4);
    phi2 << r, 0, 0, 0;
    CHECK((phi_to_beta(phi2).values() - b).norm() < 1e-12);

    Eigen::VectorXd one(1);
    one << 0.6;
    const Eigen::MatrixXd jac = jacobian_phi(one);
    CHECK(jac(0, 0) == doctest::Approx(-0.75));
    CHECK(jac(1, 0) == 1.0);
    const Eigen::MatrixXd jac0 = jacobian_phi(Eigen::VectorXd::Zero(3));
    CHECK(jac0.row(0).isZero(0.0));
    CHECK(jac0.bottomRows(3).isIdentity(0.0));
}

TEST_CASE("phi round trip, unit norm and jacobian by finite differences") {
    RandomStream rng(21, 0);
    for (int trial = 0; trial < 200; ++trial) {
        const Eigen::Index q = 2 + static_cast<Eigen::Index>(rng.next_u32() % 6);
        Eigen::VectorXd raw = testing::normal_matrix(q, 1, rng).col(0);
        raw[0] = std::abs(raw[0]) + 0.1;
        const LoadingVector beta = LoadingVector::normalized(raw);
        const Eigen::VectorXd phi = beta_to_phi(beta);
        CHECK((phi_to_beta(phi).values() - beta.values()).cwiseAbs().maxCoeff() < 1e-12);
        CHECK(std::abs(phi_to_beta(phi).values().norm() - 1.0) < 1e-12);

        const Eigen::MatrixXd jac = jacobian_phi(phi);
        for (Eigen::Index j = 0; j < phi.size(); ++j) {
            const Eigen::VectorXd fd = testing::central_difference(
                [&](double t) {
                    Eigen::VectorXd moved = phi;
                    moved[j] += t;
                    return Eigen::VectorXd(phi_to_beta(moved).values());
                },
                0.0, 1e-7);
            CHECK((jac.col(j) - fd).cwiseAbs().maxCoeff() < 1e-6);
        }
    }
}

TEST_CASE("reparametrization rejects points off the open ball") {
    Eigen::VectorXd phi(2);
    phi << 0.8, 0.6;
    CHECK_THROWS_AS(phi_to_beta(phi), ConstraintError);
    CHECK_THROWS_AS(jacobian_phi(phi), ConstraintError);
    Eigen::VectorXd bad(2);
    bad << 0.6, 0.6;
    CHECK_THROWS_AS(LoadingVector{bad}, ConstraintError);
    Eigen::VectorXd negative(2);
    negative << -0.6, 0.8;
    CHECK_THROWS_AS(LoadingVector{negative}, ConstraintError);
    CHECK(LoadingVector::normalized(negative)[0] == doctest::Approx(0.6));
    CHECK_THROWS_AS(LoadingVector::normalized(Eigen::VectorXd::Zero(3)), DegenerateUpdateError);
}

TEST_CASE("index values") {
    RandomStream rng(22, 0);
    const Eigen::MatrixXd x = testing::uniform_matrix(30, 4, rng);
    const Dataset data = make_dataset(Eigen::VectorXd::Zero(30), x, Eigen::MatrixXd(30, 0));
    CHECK((index_values(data, LoadingVector::unit(4)) - x.col(0)).norm() == 0.0);

    Eigen::VectorXd raw(4);
    raw << 0.3, -0.2, 0.5, 0.1;
    const LoadingVector beta = LoadingVector::normalized(raw);
    const Eigen::VectorXd u = index_values(data, beta);
    for (Eigen::Index i = 0; i < 30; ++i) {
        double naive = 0.0;
        for (Eigen::Index d = 0; d < 4; ++d) naive += x(i, d) * beta[d];
        CHECK(u[i] == doctest::Approx(naive).epsilon(1e-14));
    }

    Eigen::MatrixXd same(5, 4);
    for (Eigen::Index i = 0; i < 5; ++i) same.row(i) = x.row(0);
    const Dataset flat = make_dataset(Eigen::VectorXd::Zero(5), same, Eigen::MatrixXd(5, 0));
    const Eigen::VectorXd v = index_values(flat, beta);
    CHECK((v.array() - x.row(0).dot(beta.values())).abs().maxCoeff() < 1e-15);
}

TEST_CASE("design matrix against pointwise evaluation") {
    RandomStream rng(23, 0);
    const Eigen::Index n = 40;
    const Eigen::Index p = 3;
    const Eigen::Index q = 3;
    const Dataset data = make_dataset(testing::normal_matrix(n, 1, rng).col(0),
                                      testing::uniform_matrix(n, q, rng),
                                      testing::normal_matrix(n, p, rng));
    const BasisSpec base = make_basis(0.0, 1.0, 2, 3);
    FittedModel fit = random_fit(rng, p, q, base);
    const Eigen::VectorXd u = index_values(data, fit.beta);
    fit.spec = make_basis(u.minCoeff(), u.maxCoeff(), 2, 3);

    const Eigen::MatrixXd w = design_matrix(data, fit.spec, fit.beta);
    CHECK(w.cols() == fit.spec.size() * (p + 1));
    const Eigen::VectorXd via_design = w * fit.coef.flat();
    for (Eigen::Index i = 0; i < n; ++i) {
        double pointwise = 0.0;
        Eigen::VectorXd ui(1);
        ui << u[i];
        for (Eigen::Index k = 0; k <= p; ++k) pointwise += evaluate_fk(fit, static_cast<int>(k), ui)[0] * data.g(i, k);
        CHECK(via_design[i] == doctest::Approx(pointwise).epsilon(1e-12));
    }
    CHECK((predict(fit, data.x, data.g).values - via_design).cwiseAbs().maxCoeff() < 1e-12);

    const Dataset intercept_only = make_dataset(data.y, data.x, Eigen::MatrixXd(n, 0));
    const Eigen::MatrixXd w0 = design_matrix(intercept_only, fit.spec, fit.beta);
    for (Eigen::Index i = 0; i < n; ++i) {
        CHECK((w0.row(i).transpose() - eval_basis(fit.spec, u[i]).transformed).norm() < 1e-15);
    }
}

TEST_CASE("evaluate_fk for zero, constant and intercept-only models") {
    RandomStream rng(24, 0);
    const BasisSpec spec = make_basis(0.0, 1.0, 2, 4);
    FittedModel fit;
    fit.spec = spec;
    fit.beta = LoadingVector::unit(2);
    fit.coef = Coefficients::zeros(2, spec.size());
    fit.coef.genes[0].constant = 0.4;
    fit.coef.genes[0].varying = testing::normal_matrix(spec.size() - 1, 1, rng).col(0);
    fit.coef.genes[1].constant = 1.7;
    const Eigen::VectorXd u = Eigen::VectorXd::LinSpaced(11, 0.0, 1.0);
    CHECK(evaluate_fk(fit, 2, u).isZero(0.0));
    CHECK((evaluate_fk(fit, 1, u).array() - 1.7).abs().maxCoeff() == 0.0);

    Eigen::MatrixXd x = Eigen::MatrixXd::Zero(11, 2);
    x.col(0) = u;
    Eigen::MatrixXd g = Eigen::MatrixXd::Zero(11, 3);
    g.col(0).setOnes();
    fit.coef.genes[1].constant = 0.0;
    CHECK((predict(fit, x, g).values - evaluate_fk(fit, 0, u)).norm() < 1e-14);
    CHECK_THROWS_AS(evaluate_fk(fit, 3, u), ParameterError);
}

TEST_CASE("classification from coefficients") {
    Coefficients coef = Coefficients::zeros(3, 4);
    coef.genes[1].varying[2] = 0.1;
    coef.genes[2].constant = -2.0;
    Eigen::VectorXd raw(3);
    raw << 0.8, 0.0, 0.6;
    const FunctionClassification c = FunctionClassification::from_coefficients(coef, LoadingVector(raw));
    CHECK(c.varying == std::vector<int>{1});
    CHECK(c.constant == std::vector<int>{2});
    CHECK(c.zero == std::vector<int>{3});
    CHECK(c.beta_support == std::vector<int>{0, 2});
    CHECK(c.kind(0) == EffectKind::varying);
    CHECK(c.kind(2) == EffectKind::constant);
    CHECK_THROWS_AS(c.kind(7), ParameterError);
}

TEST_CASE("flat coefficient layout round trips") {
    RandomStream rng(25, 0);
    const Eigen::VectorXd flat = testing::normal_matrix(20, 1, rng).col(0);
    const Coefficients coef = Coefficients::from_flat(flat, 3, 5);
    CHECK(coef.genes[2].constant == flat[10]);
    CHECK(coef.genes[2].varying[0] == flat[11]);
    CHECK((coef.flat() - flat).norm() == 0.0);
    CHECK_THROWS_AS(Coefficients::from_flat(flat, 4, 5), ParameterError);
}

TEST_CASE("dataset validation") {
    Dataset data;
    data.y = Eigen::VectorXd::Zero(3);
    data.x = Eigen::MatrixXd::Zero(3, 2);
    data.g = Eigen::MatrixXd::Ones(3, 2);
    CHECK_NOTHROW(data.validate());
    data.g(1, 0) = 0.5;
    CHECK_THROWS_AS(data.validate(), ParameterError);
    data.g(1, 0) = 1.0;
    data.x(0, 0) = std::nan("");
    CHECK_THROWS_AS(data.validate(), ParameterError);
    data.x = Eigen::MatrixXd::Zero(2, 2);
    CHECK_THROWS_AS(data.validate(), ParameterError);
}
