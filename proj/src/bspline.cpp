#include "vmicm/bspline.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "vmicm/error.hpp"

namespace vmicm {
namespace {

// Index s with knots[s] <= u < knots[s+1], restricted to the non-empty
// spans; u == upper maps to the last span.
int find_span(const BasisSpec& spec, double u) {
    const int degree = spec.order - 1;
    const int last = degree + spec.interior_knots;
    if (u >= spec.knots[last + 1]) return last;
    const auto first = spec.knots.begin() + degree;
    const auto end = spec.knots.begin() + last + 1;
    auto it = std::upper_bound(first, end, u);
    return static_cast<int>(it - spec.knots.begin()) - 1;
}

// Cox-de Boor triangle: values of the `degree` B-splines that are nonzero
// on `span`, i.e. indices span-degree .. span, written to values[0..degree].
void nonzero_basis(const BasisSpec& spec, int span, double u, int degree, double* values) {
    double left[8];
    double right[8];
    values[0] = 1.0;
    for (int j = 1; j <= degree; ++j) {
        left[j] = u - spec.knots[span + 1 - j];
        right[j] = spec.knots[span + j] - u;
        double saved = 0.0;
        for (int r = 0; r < j; ++r) {
            const double denom = right[r + 1] + left[j - r];
            const double temp = denom > 0.0 ? values[r] / denom : 0.0;
            values[r] = saved + right[r + 1] * temp;
            saved = left[j - r] * temp;
        }
        values[j] = saved;
    }
}

void check_domain(const BasisSpec& spec, double& u) {
    if (clamp_to_domain(spec, u)) {
        throw DomainError("index value " + std::to_string(u) + " outside basis domain [" +
                          std::to_string(spec.lower) + ", " + std::to_string(spec.upper) + "]");
    }
}

void raw_into(const BasisSpec& spec, double u, Eigen::Ref<Eigen::VectorXd> out) {
    const int degree = spec.order - 1;
    const int span = find_span(spec, u);
    double values[8];
    nonzero_basis(spec, span, u, degree, values);
    out.setZero();
    for (int j = 0; j <= degree; ++j) out[span - degree + j] = values[j];
}

void raw_derivative_into(const BasisSpec& spec, double u, Eigen::Ref<Eigen::VectorXd> out) {
    const int degree = spec.order - 1;
    const int span = find_span(spec, u);
    out.setZero();
    // lower[j] holds B_{span-degree+1+j, degree-1}
    double lower[8];
    nonzero_basis(spec, span, u, degree - 1, lower);
    const auto& t = spec.knots;
    for (int j = 0; j <= degree; ++j) {
        const int i = span - degree + j;
        const double left_value = (j >= 1) ? lower[j - 1] : 0.0;
        const double right_value = (j <= degree - 1) ? lower[j] : 0.0;
        const double d1 = t[i + degree] - t[i];
        const double d2 = t[i + degree + 1] - t[i + 1];
        double d = 0.0;
        if (d1 > 0.0) d += left_value / d1;
        if (d2 > 0.0) d -= right_value / d2;
        out[i] = degree * d;
    }
}

}  // namespace

BasisSpec make_basis(double u_min, double u_max, int interior_knots, int order) {
    if (order < 2 || order > 4) {
        throw ParameterError("spline order must be 2, 3 or 4, got " + std::to_string(order));
    }
    if (interior_knots < 1) {
        throw ParameterError("interior knot count must be >= 1, got " +
                             std::to_string(interior_knots));
    }
    if (!(u_min < u_max) || !std::isfinite(u_min) || !std::isfinite(u_max)) {
        throw ParameterError("basis domain requires finite lower < upper");
    }
    BasisSpec spec;
    spec.order = order;
    spec.interior_knots = interior_knots;
    spec.lower = u_min;
    spec.upper = u_max;
    spec.knots.reserve(interior_knots + 2 * order);
    for (int i = 0; i < order; ++i) spec.knots.push_back(u_min);
    const double width = u_max - u_min;
    for (int i = 1; i <= interior_knots; ++i) {
        spec.knots.push_back(u_min + width * static_cast<double>(i) / (interior_knots + 1));
    }
    for (int i = 0; i < order; ++i) spec.knots.push_back(u_max);
    return spec;
}

bool clamp_to_domain(const BasisSpec& spec, double& u) {
    bool far = false;
    if (u < spec.lower) {
        far = (spec.lower - u) > kDomainTolerance;
        u = spec.lower;
    } else if (u > spec.upper) {
        far = (u - spec.upper) > kDomainTolerance;
        u = spec.upper;
    }
    return far;
}

BasisValue eval_basis(const BasisSpec& spec, double u) {
    check_domain(spec, u);
    BasisValue value;
    value.raw.resize(spec.size());
    raw_into(spec, u, value.raw);
    value.transformed = value.raw;
    value.transformed[0] = 1.0;
    return value;
}

Eigen::VectorXd eval_basis_derivative(const BasisSpec& spec, double u) {
    check_domain(spec, u);
    Eigen::VectorXd out(spec.size());
    transformed_derivative_into(spec, u, out);
    return out;
}

void transformed_basis_into(const BasisSpec& spec, double u, Eigen::Ref<Eigen::VectorXd> out) {
    raw_into(spec, u, out);
    out[0] = 1.0;
}

void transformed_derivative_into(const BasisSpec& spec, double u,
                                 Eigen::Ref<Eigen::VectorXd> out) {
    raw_derivative_into(spec, u, out);
    out[0] = 0.0;
}

Eigen::MatrixXd transform_matrix(int basis_size) {
    Eigen::MatrixXd pi = Eigen::MatrixXd::Identity(basis_size, basis_size);
    pi.row(0).setOnes();
    return pi;
}

KnotOrderGrid knot_order_grid(int n, int smoothness) {
    if (n < 10 || smoothness < 2) {
        throw ParameterError("knot grid requires n >= 10 and smoothness r >= 2");
    }
    const double rate = std::pow(static_cast<double>(n), 1.0 / (2.0 * smoothness + 1.0));
    KnotOrderGrid grid;
    grid.min_knots = std::max(static_cast<int>(std::floor(0.5 * rate)), 1);
    grid.max_knots = std::max(static_cast<int>(std::floor(1.5 * rate)), grid.min_knots);
    return grid;
}

}  // namespace vmicm
