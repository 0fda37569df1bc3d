#include "vmicm/group_descent.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "vmicm/error.hpp"

namespace vmicm {
namespace {

constexpr double kRankTolerance = 1e-10;

void orthonormalize(const Eigen::MatrixXd& w_block, OrthonormalDesign::Block& block) {
    const Eigen::Index n = w_block.rows();
    const Eigen::Index c = w_block.cols();
    if (c == 0 || w_block.squaredNorm() == 0.0) {
        block.q.resize(n, 0);
        block.forward.resize(0, c);
        block.inverse.resize(c, 0);
        block.rank_deficient = c > 0;
        return;
    }
    if (n >= c) {
        Eigen::HouseholderQR<Eigen::MatrixXd> qr(w_block);
        Eigen::MatrixXd r = qr.matrixQR().topRows(c).triangularView<Eigen::Upper>();
        const Eigen::VectorXd diag = r.diagonal().cwiseAbs();
        if (diag.minCoeff() > kRankTolerance * diag.maxCoeff()) {
            // Flip signs so that R has a positive diagonal.
            for (Eigen::Index j = 0; j < c; ++j) {
                if (r(j, j) < 0.0) r.row(j) *= -1.0;
            }
            block.forward = r;
            block.inverse = r.triangularView<Eigen::Upper>().solve(
                Eigen::MatrixXd::Identity(c, c));
            block.q = w_block * block.inverse;
            return;
        }
    }
    // Rank-deficient: keep the left singular vectors above the tolerance.
    Eigen::BDCSVD<Eigen::MatrixXd> svd(w_block, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Eigen::VectorXd& values = svd.singularValues();
    Eigen::Index r = 0;
    while (r < values.size() && values[r] > kRankTolerance * values[0]) ++r;
    block.forward = values.head(r).asDiagonal() * svd.matrixV().leftCols(r).transpose();
    block.inverse = svd.matrixV().leftCols(r) * values.head(r).cwiseInverse().asDiagonal();
    block.q = svd.matrixU().leftCols(r);
    block.rank_deficient = true;
}

}  // namespace

void SolverConfig::validate() const {
    if (!(inner_tol > 0.0) || !(outer_tol > 0.0)) throw ParameterError("tolerances must be > 0");
    if (max_inner_iter < 1 || max_outer_iter < 1) throw ParameterError("iteration caps must be >= 1");
    if (!(ridge_eps >= 0.0)) throw ParameterError("ridge_eps must be >= 0");
    if (!(tau > 1.0)) throw ParameterError("tau must be > 1");
}

GroupLayout GroupLayout::varying_selection(Eigen::Index p, int basis_size) {
    const Eigen::Index L = basis_size;
    GroupLayout layout;
    layout.total_columns = L * (p + 1);
    GroupSpec base;
    for (Eigen::Index j = 0; j < L; ++j) base.columns.push_back(j);
    for (Eigen::Index k = 1; k <= p; ++k) base.columns.push_back(k * L);
    layout.groups.push_back(std::move(base));
    for (Eigen::Index k = 1; k <= p; ++k) {
        GroupSpec group;
        group.penalized = true;
        group.gene = static_cast<int>(k);
        group.anchors = layout.groups.front().columns;
        for (Eigen::Index j = 1; j < L; ++j) group.columns.push_back(k * L + j);
        layout.groups.push_back(std::move(group));
    }
    return layout;
}

GroupLayout GroupLayout::constant_selection(Eigen::Index p, int basis_size,
                                            const std::vector<int>& varying) {
    const Eigen::Index L = basis_size;
    GroupLayout layout;
    layout.total_columns = L * (p + 1);
    GroupSpec base;
    for (Eigen::Index j = 0; j < L; ++j) base.columns.push_back(j);
    for (int k : varying) {
        if (k < 1 || k > p) throw ParameterError("varying index out of range");
        for (Eigen::Index j = 0; j < L; ++j) base.columns.push_back(k * L + j);
    }
    layout.groups.push_back(std::move(base));
    for (Eigen::Index k = 1; k <= p; ++k) {
        if (std::find(varying.begin(), varying.end(), static_cast<int>(k)) != varying.end()) continue;
        GroupSpec group;
        group.penalized = true;
        group.gene = static_cast<int>(k);
        group.columns.push_back(k * L);
        group.anchors = layout.groups.front().columns;
        layout.groups.push_back(std::move(group));
        for (Eigen::Index j = 1; j < L; ++j) layout.fixed_zero.push_back(k * L + j);
    }
    return layout;
}

std::size_t GroupLayout::penalized_count() const {
    return static_cast<std::size_t>(
        std::count_if(groups.begin(), groups.end(), [](const GroupSpec& g) { return g.penalized; }));
}

void GroupLayout::validate() const {
    std::vector<int> seen(static_cast<std::size_t>(total_columns), 0);
    auto mark = [&](Eigen::Index c) {
        if (c < 0 || c >= total_columns) throw ParameterError("layout column out of range");
        ++seen[static_cast<std::size_t>(c)];
    };
    for (const auto& group : groups) {
        for (auto c : group.columns) mark(c);
    }
    for (auto c : fixed_zero) mark(c);
    for (int count : seen) {
        if (count != 1) throw ParameterError("layout groups must partition the design columns");
    }
    for (const auto& group : groups) {
        for (Eigen::Index anchor : group.anchors) {
            bool found = false;
            for (const auto& other : groups) {
                if (!other.penalized &&
                    std::find(other.columns.begin(), other.columns.end(), anchor) != other.columns.end()) {
                    found = true;
                }
            }
            if (!found) throw ParameterError("group anchors must be unpenalized columns");
        }
    }
}

OrthonormalDesign::OrthonormalDesign(const Eigen::MatrixXd& w, const GroupLayout& layout)
    : layout_(layout), rows_(w.rows()) {
    if (w.cols() != layout.total_columns) {
        throw ParameterError("design has " + std::to_string(w.cols()) + " columns, layout expects " +
                             std::to_string(layout.total_columns));
    }
    layout_.validate();
    blocks_.reserve(layout_.groups.size());
    std::vector<Eigen::Index> factored;
    Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> anchor_qr;
    anchor_qr.setThreshold(kRankTolerance);
    for (const auto& group : layout_.groups) {
        Block block;
        block.columns = group.columns;
        block.penalized = group.penalized;
        block.gene = group.gene;
        Eigen::MatrixXd w_block(w.rows(), static_cast<Eigen::Index>(group.columns.size()));
        for (std::size_t j = 0; j < group.columns.size(); ++j) {
            w_block.col(static_cast<Eigen::Index>(j)) = w.col(group.columns[j]);
        }
        if (!group.anchors.empty()) {
            Eigen::MatrixXd a(w.rows(), static_cast<Eigen::Index>(group.anchors.size()));
            for (std::size_t j = 0; j < group.anchors.size(); ++j) {
                a.col(static_cast<Eigen::Index>(j)) = w.col(group.anchors[j]);
            }
            if (group.anchors != factored) {
                anchor_qr.compute(a);
                factored = group.anchors;
            }
            block.anchors = group.anchors;
            block.anchor_map = anchor_qr.solve(w_block);
            w_block.noalias() -= a * block.anchor_map;
        }
        orthonormalize(w_block, block);
        blocks_.push_back(std::move(block));
    }
    Eigen::Index total = 0;
    for (const auto& block : blocks_) {
        offsets_.push_back(total);
        total += block.q.cols();
    }
    Eigen::MatrixXd stacked(rows_, total);
    for (std::size_t m = 0; m < blocks_.size(); ++m) {
        stacked.middleCols(offsets_[m], blocks_[m].q.cols()) = blocks_[m].q;
    }
    gram_ = Eigen::MatrixXd(total, total);
    gram_.triangularView<Eigen::Lower>() = stacked.transpose() * stacked;
    gram_.triangularView<Eigen::StrictlyUpper>() = gram_.transpose();
}

namespace {

Eigen::VectorXd gather(const Eigen::VectorXd& flat, const std::vector<Eigen::Index>& columns) {
    Eigen::VectorXd out(static_cast<Eigen::Index>(columns.size()));
    for (std::size_t j = 0; j < columns.size(); ++j) out[static_cast<Eigen::Index>(j)] = flat[columns[j]];
    return out;
}

}  // namespace

std::vector<Eigen::VectorXd> OrthonormalDesign::to_orthonormal(const Eigen::VectorXd& flat) const {
    Eigen::VectorXd shifted = flat;
    for (const auto& block : blocks_) {
        if (block.anchors.empty()) continue;
        const Eigen::VectorXd shift = block.anchor_map * gather(flat, block.columns);
        for (std::size_t j = 0; j < block.anchors.size(); ++j) {
            shifted[block.anchors[j]] += shift[static_cast<Eigen::Index>(j)];
        }
    }
    std::vector<Eigen::VectorXd> out;
    out.reserve(blocks_.size());
    for (const auto& block : blocks_) out.push_back(block.forward * gather(shifted, block.columns));
    return out;
}

Eigen::VectorXd OrthonormalDesign::to_original(const std::vector<Eigen::VectorXd>& b) const {
    Eigen::VectorXd flat = Eigen::VectorXd::Zero(layout_.total_columns);
    for (std::size_t m = 0; m < blocks_.size(); ++m) {
        const auto& block = blocks_[m];
        if (block.q.cols() == 0) continue;
        const Eigen::VectorXd gamma = block.inverse * b[m];
        for (std::size_t j = 0; j < block.columns.size(); ++j) {
            flat[block.columns[j]] = gamma[static_cast<Eigen::Index>(j)];
        }
    }
    for (const auto& block : blocks_) {
        if (block.anchors.empty()) continue;
        const Eigen::VectorXd shift = block.anchor_map * gather(flat, block.columns);
        for (std::size_t j = 0; j < block.anchors.size(); ++j) {
            flat[block.anchors[j]] -= shift[static_cast<Eigen::Index>(j)];
        }
    }
    return flat;
}

std::vector<Eigen::VectorXd> OrthonormalDesign::zeros() const {
    std::vector<Eigen::VectorXd> out;
    out.reserve(blocks_.size());
    for (const auto& block : blocks_) out.push_back(Eigen::VectorXd::Zero(block.q.cols()));
    return out;
}

double penalized_objective(const OrthonormalDesign& design, const Eigen::VectorXd& y,
                           const std::vector<McpParams>& penalties,
                           const std::vector<Eigen::VectorXd>& b) {
    Eigen::VectorXd r = y;
    double penalty = 0.0;
    const auto& blocks = design.blocks();
    for (std::size_t m = 0; m < blocks.size(); ++m) {
        if (blocks[m].q.cols() == 0) continue;
        r.noalias() -= blocks[m].q * b[m];
        if (blocks[m].penalized) penalty += mcp_value(b[m].norm(), penalties[m]);
    }
    return 0.5 * r.squaredNorm() + penalty;
}

DescentResult group_descent(const OrthonormalDesign& design, const Eigen::VectorXd& y,
                            const std::vector<McpParams>& penalties,
                            std::vector<Eigen::VectorXd> start, const SolverConfig& config,
                            bool record_trace, bool freeze_penalized) {
    const auto& blocks = design.blocks();
    if (penalties.size() != blocks.size() || start.size() != blocks.size()) {
        throw ParameterError("penalties and start must have one entry per block");
    }
    if (y.size() != design.rows()) throw ParameterError("response length differs from design rows");

    DescentResult result;
    result.orthonormal = std::move(start);
    auto& b = result.orthonormal;
    Eigen::VectorXd r = y;
    for (std::size_t m = 0; m < blocks.size(); ++m) {
        if (b[m].size() != blocks[m].q.cols()) throw ParameterError("start block has wrong length");
        if (blocks[m].q.cols() > 0) r.noalias() -= blocks[m].q * b[m];
    }

    auto penalty_sum = [&]() {
        double total = 0.0;
        for (std::size_t m = 0; m < blocks.size(); ++m) {
            if (blocks[m].penalized && blocks[m].q.cols() > 0) {
                total += mcp_value(b[m].norm(), penalties[m]);
            }
        }
        return total;
    };

    Eigen::VectorXd z;
    Eigen::VectorXd updated;
    auto update_block = [&](std::size_t m) -> double {
        const auto& block = blocks[m];
        if (block.q.cols() == 0) return 0.0;
        if (block.penalized && freeze_penalized) return 0.0;
        z.noalias() = block.q.transpose() * r;
        z += b[m];
        if (block.penalized) {
            updated = group_firm_threshold(z, penalties[m]);
        } else {
            updated = z;
        }
        const Eigen::VectorXd delta = updated - b[m];
        const double change = delta.size() ? delta.cwiseAbs().maxCoeff() : 0.0;
        if (change > 0.0) {
            r.noalias() -= block.q * delta;
            b[m] = updated;
        }
        return change;
    };

    auto active = [&](std::size_t m) {
        return !blocks[m].penalized || (b[m].size() > 0 && (b[m].array() != 0.0).any());
    };

    // Joint least squares step over the nonzero blocks, kept only if it
    // lowers the penalized objective.
    auto polish = [&]() {
        std::vector<std::size_t> members;
        Eigen::Index dim = 0;
        for (std::size_t m = 0; m < blocks.size(); ++m) {
            if (blocks[m].q.cols() == 0 || (blocks[m].penalized && freeze_penalized)) continue;
            if (blocks[m].penalized && !active(m)) continue;
            members.push_back(m);
            dim += blocks[m].q.cols();
        }
        if (members.size() < 2) return;
        Eigen::MatrixXd g(dim, dim);
        Eigen::VectorXd rhs(dim);
        Eigen::Index row = 0;
        for (std::size_t a : members) {
            Eigen::Index col = 0;
            const Eigen::Index ra = blocks[a].q.cols();
            for (std::size_t c : members) {
                const Eigen::Index rc = blocks[c].q.cols();
                g.block(row, col, ra, rc) = design.gram().block(design.offset(a), design.offset(c), ra, rc);
                col += rc;
            }
            rhs.segment(row, ra).noalias() = blocks[a].q.transpose() * r;
            row += ra;
        }
        Eigen::LDLT<Eigen::MatrixXd> ldlt(g);
        if (ldlt.info() != Eigen::Success) return;
        const Eigen::VectorXd step = ldlt.solve(rhs);
        if (!step.allFinite()) return;
        Eigen::VectorXd trial_r = r;
        std::vector<Eigen::VectorXd> trial_b;
        double trial_penalty = 0.0;
        row = 0;
        for (std::size_t a : members) {
            const Eigen::Index ra = blocks[a].q.cols();
            const auto delta = step.segment(row, ra);
            trial_r.noalias() -= blocks[a].q * delta;
            trial_b.push_back(b[a] + delta);
            if (blocks[a].penalized) trial_penalty += mcp_value(trial_b.back().norm(), penalties[a]);
            row += ra;
        }
        for (std::size_t m = 0; m < blocks.size(); ++m) {
            if (blocks[m].penalized && std::find(members.begin(), members.end(), m) == members.end() &&
                blocks[m].q.cols() > 0) {
                trial_penalty += mcp_value(b[m].norm(), penalties[m]);
            }
        }
        const double current = 0.5 * r.squaredNorm() + penalty_sum();
        if (0.5 * trial_r.squaredNorm() + trial_penalty < current) {
            for (std::size_t i = 0; i < members.size(); ++i) b[members[i]] = std::move(trial_b[i]);
            r = std::move(trial_r);
            if (record_trace) result.objective_trace.push_back(0.5 * r.squaredNorm() + penalty_sum());
        }
    };

    int sweeps = 0;
    while (sweeps < config.max_inner_iter) {
        double change = 0.0;
        for (std::size_t m = 0; m < blocks.size(); ++m) change = std::max(change, update_block(m));
        ++sweeps;
        if (record_trace) result.objective_trace.push_back(0.5 * r.squaredNorm() + penalty_sum());
        if (change < config.inner_tol) {
            result.converged = true;
            break;
        }
        polish();
        // Cycle the active set until it settles, then recheck everything.
        while (sweeps < config.max_inner_iter) {
            double active_change = 0.0;
            for (std::size_t m = 0; m < blocks.size(); ++m) {
                if (active(m)) active_change = std::max(active_change, update_block(m));
            }
            ++sweeps;
            if (record_trace) result.objective_trace.push_back(0.5 * r.squaredNorm() + penalty_sum());
            if (active_change < config.inner_tol) break;
            if (sweeps % 10 == 0) polish();
        }
    }

    result.sweeps = sweeps;
    result.objective = 0.5 * r.squaredNorm() + penalty_sum();
    result.residual = std::move(r);
    result.coef = design.to_original(b);
    return result;
}

DescentResult group_coordinate_descent(const Eigen::VectorXd& y, const GroupLayout& layout,
                                       const Eigen::MatrixXd& w,
                                       const std::vector<McpParams>& penalties,
                                       const Eigen::VectorXd& start, const SolverConfig& config) {
    config.validate();
    OrthonormalDesign design(w, layout);
    return group_descent(design, y, penalties, design.to_orthonormal(start), config);
}

Eigen::VectorXd ridge_least_squares(const Eigen::MatrixXd& w, const Eigen::VectorXd& y,
                                    double ridge_eps) {
    Eigen::MatrixXd gram = w.transpose() * w;
    const double scale = gram.diagonal().maxCoeff();
    if (!(scale > 0.0)) return Eigen::VectorXd::Zero(w.cols());
    gram.diagonal().array() += ridge_eps * scale;
    Eigen::LDLT<Eigen::MatrixXd> ldlt(gram);
    if (ldlt.info() != Eigen::Success) throw SolverError("ridge least squares factorization failed");
    return ldlt.solve(w.transpose() * y);
}

}  // namespace vmicm
