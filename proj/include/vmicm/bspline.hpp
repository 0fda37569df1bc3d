#pragma once

#include <array>
#include <vector>

#include <Eigen/Dense>

namespace vmicm {

// Clamped B-spline basis on [lower, upper] with equally spaced interior
// knots. The full knot vector repeats each boundary knot `order` times.
struct BasisSpec {
    int order = 4;
    int interior_knots = 1;
    double lower = 0.0;
    double upper = 1.0;
    std::vector<double> knots;

    // L = K + h
    int size() const { return interior_knots + order; }
};

struct BasisValue {
    Eigen::VectorXd raw;          // normalized B-splines, sums to one
    Eigen::VectorXd transformed;  // (1, B_2(u), ..., B_L(u))
};

inline constexpr double kDomainTolerance = 1e-12;

BasisSpec make_basis(double u_min, double u_max, int interior_knots, int order);

BasisValue eval_basis(const BasisSpec& spec, double u);

// Derivatives of the transformed components; entry 0 is always zero.
Eigen::VectorXd eval_basis_derivative(const BasisSpec& spec, double u);

// Fills `out` (length L) with the transformed basis at u without
// allocating. Used on hot paths; u must already lie in the domain.
void transformed_basis_into(const BasisSpec& spec, double u, Eigen::Ref<Eigen::VectorXd> out);
void transformed_derivative_into(const BasisSpec& spec, double u, Eigen::Ref<Eigen::VectorXd> out);

// Clamps u into [lower, upper]; returns true if clamping moved it by more
// than the domain tolerance.
bool clamp_to_domain(const BasisSpec& spec, double& u);

// The matrix mapping raw to transformed values: ones in row 0, identity
// selectors e_2..e_L below.
Eigen::MatrixXd transform_matrix(int basis_size);

struct KnotOrderGrid {
    int min_knots = 1;
    int max_knots = 1;
    std::array<int, 3> orders{2, 3, 4};
};

KnotOrderGrid knot_order_grid(int n, int smoothness);

}  // namespace vmicm
