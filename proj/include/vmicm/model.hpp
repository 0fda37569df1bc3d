#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "vmicm/bspline.hpp"

namespace vmicm {

// Response y, loading covariates x (n x q) and gene matrix g (n x (p+1))
// whose column 0 is the intercept column of ones.
struct Dataset {
    Eigen::VectorXd y;
    Eigen::MatrixXd x;
    Eigen::MatrixXd g;

    Eigen::Index n() const { return y.size(); }
    Eigen::Index q() const { return x.cols(); }
    // Number of genes, excluding the intercept column.
    Eigen::Index p() const { return g.cols() - 1; }

    // Throws ParameterError on inconsistent shapes, a non-unit intercept
    // column or non-finite entries.
    void validate() const;
};

// Builds a dataset from genes without the intercept column.
Dataset make_dataset(Eigen::VectorXd y, Eigen::MatrixXd x, const Eigen::MatrixXd& genes);

// Unit-norm loading vector with a nonnegative first component.
class LoadingVector {
public:
    LoadingVector() = default;
    // Validates |‖beta‖ - 1| < 1e-10 and beta[0] >= 0.
    explicit LoadingVector(Eigen::VectorXd beta);

    // beta / ‖beta‖ * sgn(beta[0]); a zero first component keeps the sign.
    static LoadingVector normalized(const Eigen::VectorXd& raw);
    static LoadingVector unit(Eigen::Index q);

    const Eigen::VectorXd& values() const { return beta_; }
    double operator[](Eigen::Index d) const { return beta_[d]; }
    Eigen::Index size() const { return beta_.size(); }

private:
    Eigen::VectorXd beta_;
};

Eigen::VectorXd beta_to_phi(const LoadingVector& beta);
LoadingVector phi_to_beta(const Eigen::VectorXd& phi);
Eigen::MatrixXd jacobian_phi(const Eigen::VectorXd& phi);

// Spline coefficients of one coefficient function f_k.
struct GeneCoefficients {
    double constant = 0.0;
    Eigen::VectorXd varying;  // length L - 1

    bool varying_is_zero() const { return varying.size() == 0 || (varying.array() == 0.0).all(); }
    bool is_zero() const { return constant == 0.0 && varying_is_zero(); }
};

struct Coefficients {
    std::vector<GeneCoefficients> genes;  // k = 0..p

    static Coefficients zeros(Eigen::Index p, int basis_size);
    // Flat vector in design-matrix column order: per gene (constant, varying...).
    static Coefficients from_flat(const Eigen::VectorXd& flat, Eigen::Index p, int basis_size);
    Eigen::VectorXd flat() const;
    Eigen::Index p() const { return static_cast<Eigen::Index>(genes.size()) - 1; }
    int basis_size() const { return genes.empty() ? 0 : static_cast<int>(genes[0].varying.size()) + 1; }
};

enum class EffectKind { varying, constant, zero };

const char* effect_name(EffectKind kind);

struct FunctionClassification {
    std::vector<int> varying;   // subsets of 1..p
    std::vector<int> constant;
    std::vector<int> zero;
    std::vector<int> beta_support;  // 0-based loading indices with beta_d != 0

    EffectKind kind(int k) const;
    bool same_partition(const FunctionClassification& other) const;

    // Zero pattern rules: nonzero varying part -> varying; zero varying and
    // nonzero constant -> constant; otherwise zero.
    static FunctionClassification from_coefficients(const Coefficients& coef,
                                                    const LoadingVector& beta);
};

struct TuningChoice {
    double lambda1 = 0.0;
    double lambda2 = 0.0;
    double lambda3 = 0.0;
    int knots = 0;
    int order = 0;
    double tau = 3.0;
};

struct Diagnostics {
    int outer_iterations = 0;
    double rss = 0.0;
    bool converged = false;
    bool degenerate_beta = false;
    std::vector<std::string> warnings;
};

struct FittedModel {
    BasisSpec spec;
    LoadingVector beta;
    Coefficients coef;
    FunctionClassification classification;
    TuningChoice tuning;
    Diagnostics diagnostics;
};

Eigen::VectorXd index_values(const Dataset& data, const LoadingVector& beta);

// n x L(p+1); per gene k the columns are G_k, then G_k * B_l(u) for l = 2..L.
Eigen::MatrixXd design_matrix(const Dataset& data, const BasisSpec& spec, const LoadingVector& beta);
Eigen::MatrixXd design_matrix_at(const Eigen::VectorXd& index, const Eigen::MatrixXd& g,
                                 const BasisSpec& spec);

Eigen::VectorXd evaluate_fk(const FittedModel& fit, int k, const Eigen::VectorXd& u);

struct Prediction {
    Eigen::VectorXd values;
    std::size_t clamped = 0;  // rows whose index fell outside the basis domain
};

Prediction predict(const FittedModel& fit, const Eigen::MatrixXd& x, const Eigen::MatrixXd& g);

// sum_k f_k(u_i) g_ik with u clamped into the domain; the clamp count is
// added to `clamped` when non-null.
Eigen::VectorXd fitted_values(const Eigen::VectorXd& index, const Eigen::MatrixXd& g,
                              const BasisSpec& spec, const Coefficients& coef,
                              std::size_t* clamped = nullptr);

}  // namespace vmicm
