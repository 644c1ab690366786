#pragma once

#include <stdexcept>
#include <string>

namespace srac {

/// Malformed shapes, probabilities outside the simplex, bad parameters.
class InvalidInput : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// The chain has more than one closed class, so no unique stationary law.
class NoUniqueStationary : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A linear system that should be non-singular turned out singular.
class NumericalFailure : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Feature matrix violates the rank conditions the critic needs.
class AssumptionViolation : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace srac
