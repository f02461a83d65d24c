#pragma once

#include <cmath>
#include <stdexcept>
#include <string>

namespace hyshield {

/// Bad argument to a model function (non-finite state, out-of-range control).
class InputError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Non-finite intermediate produced while stepping the dynamics.
class IntegrationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Caller broke a documented precondition (e.g. querying a mask off the feasible set).
class ContractError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

/// Malformed or mismatched configuration / artifact.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ArtifactMismatch : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

namespace detail {

inline void require_finite(double v, const char* what) {
    if (!std::isfinite(v)) throw InputError(std::string(what) + " must be finite");
}

} // namespace detail
} // namespace hyshield
