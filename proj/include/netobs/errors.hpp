#pragma once

#include <stdexcept>

namespace netobs {

// Bad input: shapes, non-finite entries, malformed graphs or gains.
class InvalidArgument : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// An analysis routine's mathematical precondition does not hold
// (non-Hurwitz matrix, violated KL condition, ...).
class PreconditionError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

// A synthesis problem found no certificate.
class InfeasibleError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Iteration caps, singular factorizations, solver breakdown.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace netobs
