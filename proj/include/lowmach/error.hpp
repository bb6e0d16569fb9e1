#pragma once

#include <stdexcept>
#include <string>

namespace lowmach {

/// Invalid thermodynamic or numerical arguments (non-positive density, ...).
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// Constitutive model violating a structural requirement (e.g. Gibbs stability).
class ModelError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Caller-side contract violation: mismatched grids, bad windows, etc.
class PreconditionError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Iterative solver failed to converge or lost positivity.
class SolverError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed experiment configuration.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace lowmach
