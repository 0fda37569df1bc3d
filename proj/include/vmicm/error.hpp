#pragma once

#include <stdexcept>
#include <string>

namespace vmicm {

// Invalid configuration or argument (bad order, knot count, dimensions).
class ParameterError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Evaluation point outside the spline domain.
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

// Loading vector outside the unit-ball reparametrization.
class ConstraintError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

// Numerical failure inside an estimation step.
class SolverError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class InitializationError : public SolverError {
public:
    using SolverError::SolverError;
};

class DegenerateUpdateError : public SolverError {
public:
    using SolverError::SolverError;
};

class TuningError : public SolverError {
public:
    using SolverError::SolverError;
};

class StudyError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Malformed input file; message names the row/column.
class InputError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace vmicm
