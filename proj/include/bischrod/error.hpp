#pragma once

#include <stdexcept>
#include <string>

namespace bischrod {

/// Raised when an argument violates an operation's precondition.
struct InvalidInput : std::invalid_argument
{
    using std::invalid_argument::invalid_argument;
};

/// Raised when a computation cannot produce a trustworthy value
/// (singular Birman-Schwinger matrix, quadrature budget exhausted, ...).
struct NumericalFailure : std::runtime_error
{
    using std::runtime_error::runtime_error;
};

namespace detail {

inline void require(bool condition, const std::string& message)
{
    if (!condition)
        throw InvalidInput(message);
}

} // namespace detail
} // namespace bischrod
