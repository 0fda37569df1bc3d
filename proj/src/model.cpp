#include "vmicm/model.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "vmicm/error.hpp"

namespace vmicm {

void Dataset::validate() const {
    if (n() < 1) throw ParameterError("dataset must contain at least one row");
    if (x.rows() != n() || g.rows() != n()) {
        throw ParameterError("dataset row counts disagree: y=" + std::to_string(n()) +
                             ", x=" + std::to_string(x.rows()) + ", g=" + std::to_string(g.rows()));
    }
    if (q() < 1) throw ParameterError("dataset needs at least one loading covariate");
    if (g.cols() < 1) throw ParameterError("gene matrix needs the intercept column");
    if ((g.col(0).array() != 1.0).any()) {
        throw ParameterError("gene matrix column 0 must be identically 1");
    }
    if (!y.allFinite() || !x.allFinite() || !g.allFinite()) {
        throw ParameterError("dataset contains non-finite values");
    }
}

Dataset make_dataset(Eigen::VectorXd y, Eigen::MatrixXd x, const Eigen::MatrixXd& genes) {
    Dataset data;
    data.g.resize(y.size(), genes.cols() + 1);
    data.g.col(0).setOnes();
    if (genes.cols() > 0) {
        if (genes.rows() != y.size()) throw ParameterError("gene matrix row count mismatch");
        data.g.rightCols(genes.cols()) = genes;
    }
    data.y = std::move(y);
    data.x = std::move(x);
    data.validate();
    return data;
}

LoadingVector::LoadingVector(Eigen::VectorXd beta) : beta_(std::move(beta)) {
    if (beta_.size() < 1) throw ParameterError("loading vector must be nonempty");
    if (std::abs(beta_.norm() - 1.0) >= 1e-10) {
        throw ConstraintError("loading vector must have unit norm");
    }
    if (beta_[0] < 0.0) throw ConstraintError("first loading must be nonnegative");
}

LoadingVector LoadingVector::normalized(const Eigen::VectorXd& raw) {
    const double norm = raw.norm();
    if (!(norm > 0.0) || !std::isfinite(norm)) {
        throw DegenerateUpdateError("cannot normalize a zero loading vector");
    }
    const double sign = raw[0] < 0.0 ? -1.0 : 1.0;
    Eigen::VectorXd beta = raw * (sign / norm);
    // Renormalize once more to absorb rounding in the division.
    beta /= beta.norm();
    return LoadingVector(std::move(beta));
}

LoadingVector LoadingVector::unit(Eigen::Index q) {
    Eigen::VectorXd e = Eigen::VectorXd::Zero(q);
    e[0] = 1.0;
    return LoadingVector(std::move(e));
}

Eigen::VectorXd beta_to_phi(const LoadingVector& beta) {
    return beta.values().tail(beta.size() - 1);
}

LoadingVector phi_to_beta(const Eigen::VectorXd& phi) {
    const double sq = phi.squaredNorm();
    if (!(sq < 1.0)) throw ConstraintError("reparametrization requires ‖phi‖ < 1");
    Eigen::VectorXd beta(phi.size() + 1);
    beta[0] = std::sqrt(1.0 - sq);
    beta.tail(phi.size()) = phi;
    return LoadingVector(std::move(beta));
}

Eigen::MatrixXd jacobian_phi(const Eigen::VectorXd& phi) {
    const double sq = phi.squaredNorm();
    if (!(sq < 1.0)) throw ConstraintError("reparametrization requires ‖phi‖ < 1");
    const Eigen::Index m = phi.size();
    Eigen::MatrixXd jac(m + 1, m);
    jac.row(0) = -phi.transpose() / std::sqrt(1.0 - sq);
    jac.bottomRows(m).setIdentity();
    return jac;
}

Coefficients Coefficients::zeros(Eigen::Index p, int basis_size) {
    Coefficients coef;
    coef.genes.resize(static_cast<std::size_t>(p + 1));
    for (auto& gene : coef.genes) gene.varying = Eigen::VectorXd::Zero(basis_size - 1);
    return coef;
}

Coefficients Coefficients::from_flat(const Eigen::VectorXd& flat, Eigen::Index p, int basis_size) {
    if (flat.size() != basis_size * (p + 1)) {
        throw ParameterError("flat coefficient length does not match L(p+1)");
    }
    Coefficients coef;
    coef.genes.resize(static_cast<std::size_t>(p + 1));
    for (Eigen::Index k = 0; k <= p; ++k) {
        auto& gene = coef.genes[static_cast<std::size_t>(k)];
        gene.constant = flat[k * basis_size];
        gene.varying = flat.segment(k * basis_size + 1, basis_size - 1);
    }
    return coef;
}

Eigen::VectorXd Coefficients::flat() const {
    const int L = basis_size();
    Eigen::VectorXd out(L * static_cast<Eigen::Index>(genes.size()));
    for (std::size_t k = 0; k < genes.size(); ++k) {
        const auto offset = static_cast<Eigen::Index>(k) * L;
        out[offset] = genes[k].constant;
        out.segment(offset + 1, L - 1) = genes[k].varying;
    }
    return out;
}

const char* effect_name(EffectKind kind) {
    switch (kind) {
        case EffectKind::varying: return "varying";
        case EffectKind::constant: return "constant";
        case EffectKind::zero: return "zero";
    }
    return "unknown";
}

EffectKind FunctionClassification::kind(int k) const {
    if (k == 0) return EffectKind::varying;
    auto has = [k](const std::vector<int>& s) { return std::find(s.begin(), s.end(), k) != s.end(); };
    if (has(varying)) return EffectKind::varying;
    if (has(constant)) return EffectKind::constant;
    if (has(zero)) return EffectKind::zero;
    throw ParameterError("function index " + std::to_string(k) + " not classified");
}

bool FunctionClassification::same_partition(const FunctionClassification& other) const {
    return varying == other.varying && constant == other.constant && zero == other.zero &&
           beta_support == other.beta_support;
}

FunctionClassification FunctionClassification::from_coefficients(const Coefficients& coef,
                                                                  const LoadingVector& beta) {
    FunctionClassification out;
    for (std::size_t k = 1; k < coef.genes.size(); ++k) {
        const auto& gene = coef.genes[k];
        const int idx = static_cast<int>(k);
        if (!gene.varying_is_zero()) {
            out.varying.push_back(idx);
        } else if (gene.constant != 0.0) {
            out.constant.push_back(idx);
        } else {
            out.zero.push_back(idx);
        }
    }
    for (Eigen::Index d = 0; d < beta.size(); ++d) {
        if (beta[d] != 0.0) out.beta_support.push_back(static_cast<int>(d));
    }
    return out;
}

Eigen::VectorXd index_values(const Dataset& data, const LoadingVector& beta) {
    if (data.q() != beta.size()) throw ParameterError("loading vector length differs from q");
    return data.x * beta.values();
}

Eigen::MatrixXd design_matrix_at(const Eigen::VectorXd& index, const Eigen::MatrixXd& g,
                                 const BasisSpec& spec) {
    const int L = spec.size();
    const Eigen::Index n = index.size();
    const Eigen::Index genes = g.cols();
    Eigen::MatrixXd w(n, L * genes);
    Eigen::VectorXd basis(L);
    for (Eigen::Index i = 0; i < n; ++i) {
        double u = index[i];
        if (clamp_to_domain(spec, u)) {
            throw DomainError("row " + std::to_string(i) + ": index outside basis domain");
        }
        transformed_basis_into(spec, u, basis);
        for (Eigen::Index k = 0; k < genes; ++k) {
            w.block(i, k * L, 1, L) = g(i, k) * basis.transpose();
        }
    }
    return w;
}

Eigen::MatrixXd design_matrix(const Dataset& data, const BasisSpec& spec, const LoadingVector& beta) {
    return design_matrix_at(index_values(data, beta), data.g, spec);
}

Eigen::VectorXd fitted_values(const Eigen::VectorXd& index, const Eigen::MatrixXd& g,
                              const BasisSpec& spec, const Coefficients& coef,
                              std::size_t* clamped) {
    const int L = spec.size();
    if (coef.basis_size() != L || g.cols() != static_cast<Eigen::Index>(coef.genes.size())) {
        throw ParameterError("coefficients do not match basis or gene count");
    }
    std::vector<Eigen::Index> active;
    for (std::size_t k = 0; k < coef.genes.size(); ++k) {
        if (!coef.genes[k].is_zero()) active.push_back(static_cast<Eigen::Index>(k));
    }
    Eigen::VectorXd out = Eigen::VectorXd::Zero(index.size());
    Eigen::VectorXd basis(L);
    std::size_t moved = 0;
    for (Eigen::Index i = 0; i < index.size(); ++i) {
        double u = index[i];
        if (clamp_to_domain(spec, u)) ++moved;
        transformed_basis_into(spec, u, basis);
        double value = 0.0;
        for (Eigen::Index k : active) {
            const auto& gene = coef.genes[static_cast<std::size_t>(k)];
            value += g(i, k) * (gene.constant + basis.tail(L - 1).dot(gene.varying));
        }
        out[i] = value;
    }
    if (clamped != nullptr) *clamped += moved;
    return out;
}

Eigen::VectorXd evaluate_fk(const FittedModel& fit, int k, const Eigen::VectorXd& u) {
    if (k < 0 || k >= static_cast<int>(fit.coef.genes.size())) {
        throw ParameterError("function index " + std::to_string(k) + " out of range");
    }
    const auto& gene = fit.coef.genes[static_cast<std::size_t>(k)];
    const int L = fit.spec.size();
    Eigen::VectorXd out(u.size());
    Eigen::VectorXd basis(L);
    for (Eigen::Index j = 0; j < u.size(); ++j) {
        double point = u[j];
        if (clamp_to_domain(fit.spec, point)) {
            throw DomainError("evaluation point outside basis domain");
        }
        transformed_basis_into(fit.spec, point, basis);
        out[j] = gene.constant + basis.tail(L - 1).dot(gene.varying);
    }
    return out;
}

Prediction predict(const FittedModel& fit, const Eigen::MatrixXd& x, const Eigen::MatrixXd& g) {
    if (x.cols() != fit.beta.size()) throw ParameterError("x has the wrong number of columns");
    if (g.cols() != static_cast<Eigen::Index>(fit.coef.genes.size())) {
        throw ParameterError("g has the wrong number of columns");
    }
    if (x.rows() != g.rows()) throw ParameterError("x and g row counts differ");
    Prediction out;
    out.values = fitted_values(x * fit.beta.values(), g, fit.spec, fit.coef, &out.clamped);
    return out;
}

}  // namespace vmicm
