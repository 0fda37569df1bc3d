#pragma once

#include <vector>

#include <Eigen/Dense>

#include "vmicm/penalty.hpp"

namespace vmicm {

struct SolverConfig {
    double inner_tol = 1e-6;   // max absolute coefficient change per sweep
    double outer_tol = 1e-5;   // max absolute loading change per outer iteration
    int max_inner_iter = 500;
    int max_outer_iter = 50;
    double ridge_eps = 1e-8;   // relative ridge on unpenalized normal equations
    double tau = 3.0;

    void validate() const;
};

// One block of design columns updated together. Block 0 collects the
// unpenalized columns.
struct GroupSpec {
    std::vector<Eigen::Index> columns;
    bool penalized = false;
    int gene = -1;  // owning coefficient function, -1 for the unpenalized block
    // Unpenalized columns projected out of this group before orthonormalizing;
    // their coefficients absorb the projection.
    std::vector<Eigen::Index> anchors;
};

struct GroupLayout {
    std::vector<GroupSpec> groups;
    std::vector<Eigen::Index> fixed_zero;  // columns held at zero, outside every group
    Eigen::Index total_columns = 0;

    // Varying selection: the intercept function and every constant part are
    // unpenalized; varying parts of genes 1..p form penalized groups.
    static GroupLayout varying_selection(Eigen::Index p, int basis_size);

    // Constant selection given the varying set: the intercept function and
    // every varying gene are unpenalized; constants of the remaining genes
    // are penalized singletons and their varying parts are fixed at zero.
    // In both layouts every penalized group is anchored on all unpenalized
    // columns.
    static GroupLayout constant_selection(Eigen::Index p, int basis_size,
                                          const std::vector<int>& varying);

    std::size_t penalized_count() const;
    // Throws ParameterError unless groups and fixed_zero partition the columns.
    void validate() const;
};

// Each group's columns W_m re-expressed as W_m = Q_m F_m with Q_m^T Q_m = I.
// An anchored group first loses its projection on the span of its anchors.
// Full-rank groups use Householder QR (F_m = R_m); rank-deficient groups
// keep the numerically nonzero part of their column space and map back
// with the minimum-norm inverse.
class OrthonormalDesign {
public:
    struct Block {
        std::vector<Eigen::Index> columns;
        bool penalized = false;
        int gene = -1;
        Eigen::MatrixXd q;        // n x r
        Eigen::MatrixXd forward;  // r x c, b = forward * gamma
        Eigen::MatrixXd inverse;  // c x r, gamma = inverse * b
        bool rank_deficient = false;
        std::vector<Eigen::Index> anchors;
        Eigen::MatrixXd anchor_map;  // anchor coefficient shift per unit gamma
    };

    OrthonormalDesign(const Eigen::MatrixXd& w, const GroupLayout& layout);

    const std::vector<Block>& blocks() const { return blocks_; }
    const GroupLayout& layout() const { return layout_; }
    Eigen::Index rows() const { return rows_; }

    // Cross products Q_m^T Q_j of every block pair; block m occupies rows
    // offset(m) .. offset(m) + r_m.
    const Eigen::MatrixXd& gram() const { return gram_; }
    Eigen::Index offset(std::size_t m) const { return offsets_[m]; }

    std::vector<Eigen::VectorXd> to_orthonormal(const Eigen::VectorXd& flat) const;
    Eigen::VectorXd to_original(const std::vector<Eigen::VectorXd>& b) const;
    std::vector<Eigen::VectorXd> zeros() const;

private:
    GroupLayout layout_;
    std::vector<Block> blocks_;
    std::vector<Eigen::Index> offsets_;
    Eigen::MatrixXd gram_;
    Eigen::Index rows_ = 0;
};

struct DescentResult {
    std::vector<Eigen::VectorXd> orthonormal;
    Eigen::VectorXd coef;       // original scale, design column order
    Eigen::VectorXd residual;   // y - W coef
    double objective = 0.0;
    int sweeps = 0;
    bool converged = false;
    std::vector<double> objective_trace;  // one entry per sweep
};

// 0.5 ‖y - sum Q_m b_m‖^2 + sum over penalized m of mcp(‖b_m‖).
double penalized_objective(const OrthonormalDesign& design, const Eigen::VectorXd& y,
                           const std::vector<McpParams>& penalties,
                           const std::vector<Eigen::VectorXd>& b);

// Blockwise coordinate descent: unpenalized blocks take their least squares
// update, penalized blocks the group firm threshold. After each full sweep
// a joint least squares step on the nonzero blocks is taken when it lowers
// the objective, then the active blocks are cycled until stable before the
// next full sweep.
// `penalties` has one entry per block (ignored for unpenalized blocks).
// With `freeze_penalized` the penalized blocks stay at their start value.
DescentResult group_descent(const OrthonormalDesign& design, const Eigen::VectorXd& y,
                            const std::vector<McpParams>& penalties,
                            std::vector<Eigen::VectorXd> start, const SolverConfig& config,
                            bool record_trace = false, bool freeze_penalized = false);

// Convenience wrapper on the raw design: orthonormalizes, runs the descent
// from `start` (original scale) and returns original-scale coefficients.
DescentResult group_coordinate_descent(const Eigen::VectorXd& y, const GroupLayout& layout,
                                       const Eigen::MatrixXd& w,
                                       const std::vector<McpParams>& penalties,
                                       const Eigen::VectorXd& start, const SolverConfig& config);

// Ridge-stabilized least squares on all columns.
Eigen::VectorXd ridge_least_squares(const Eigen::MatrixXd& w, const Eigen::VectorXd& y,
                                    double ridge_eps);

}  // namespace vmicm
