#pragma once

#include <vector>

#include "vmicm/group_descent.hpp"
#include "vmicm/model.hpp"
#include "vmicm/steps.hpp"
#include "vmicm/tuning.hpp"

namespace vmicm {

// Full three-step estimator: knot/order search, initialization, then
// alternating varying selection, constant selection and loading update
// (each with BIC-tuned lambda) until the loadings stop moving. The basis
// domain is re-anchored to the current index range every outer iteration.
FittedModel fit(const Dataset& data, const SolverConfig& config = {},
                const TuningConfig& tuning = {});

// Unpenalized fit restricted to a known structure: full splines for the
// intercept and `truth.varying`, scalar constants for `truth.constant`,
// nothing for `truth.zero`; loadings estimated on `beta_support` only.
// `spec` supplies K and h; its domain is re-anchored like `fit`.
FittedModel oracle_fit(const Dataset& data, const BasisSpec& spec,
                       const FunctionClassification& truth, const std::vector<int>& beta_support,
                       const SolverConfig& config = {});

}  // namespace vmicm
