#pragma once

#include <Eigen/Dense>

namespace vmicm {

// Minimax concave penalty lambda * int_0^x (1 - s/(tau*lambda))_+ ds.
struct McpParams {
    double lambda = 0.0;
    double tau = 3.0;

    McpParams() = default;
    // Throws ParameterError unless lambda >= 0 and tau > 1.
    McpParams(double lambda, double tau);
};

double mcp_value(double x, const McpParams& params);
double mcp_derivative(double x, const McpParams& params);

// Exact minimizer of 0.5 (z - b)^2 + mcp_value(|b|).
double scalar_firm_threshold(double z, const McpParams& params);

// Exact minimizer of 0.5 ‖z - b‖^2 + mcp_value(‖b‖).
Eigen::VectorXd group_firm_threshold(const Eigen::VectorXd& z, const McpParams& params);

}  // namespace vmicm
