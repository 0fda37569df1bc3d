#include "vmicm/penalty.hpp"

#include <cmath>

#include "vmicm/error.hpp"

namespace vmicm {

McpParams::McpParams(double lambda_, double tau_) : lambda(lambda_), tau(tau_) {
    if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw ParameterError("MCP lambda must be >= 0");
    if (!(tau > 1.0)) throw ParameterError("MCP tau must be > 1");
}

double mcp_value(double x, const McpParams& params) {
    if (x < 0.0) throw ParameterError("MCP argument must be nonnegative");
    const double knee = params.tau * params.lambda;
    if (x <= knee) return params.lambda * x - x * x / (2.0 * params.tau);
    return 0.5 * params.tau * params.lambda * params.lambda;
}

double mcp_derivative(double x, const McpParams& params) {
    if (x < 0.0) throw ParameterError("MCP argument must be nonnegative");
    if (params.lambda == 0.0) return 0.0;
    const double slope = params.lambda * (1.0 - x / (params.tau * params.lambda));
    return slope > 0.0 ? slope : 0.0;
}

double scalar_firm_threshold(double z, const McpParams& params) {
    const double magnitude = std::abs(z);
    if (magnitude > params.tau * params.lambda) return z;
    const double shrunk = magnitude - params.lambda;
    if (shrunk <= 0.0) return 0.0;
    return std::copysign(shrunk / (1.0 - 1.0 / params.tau), z);
}

Eigen::VectorXd group_firm_threshold(const Eigen::VectorXd& z, const McpParams& params) {
    const double norm = z.norm();
    if (norm > params.tau * params.lambda) return z;
    if (norm <= params.lambda) return Eigen::VectorXd::Zero(z.size());
    const double factor = (1.0 - params.lambda / norm) / (1.0 - 1.0 / params.tau);
    return z * factor;
}

}  // namespace vmicm
