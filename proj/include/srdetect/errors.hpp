#pragma once

#include <stdexcept>
#include <string>

namespace srdetect {

/// Bad input: domain violations, malformed configuration, inconsistent arguments.
class ValidationError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// A numeric routine could not deliver a result meeting its contract
/// (singular system, non-convergence, degenerate ratio).
class NumericFailure : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline void require(bool condition, const std::string& message) {
    if (!condition) {
        throw ValidationError(message);
    }
}

} // namespace srdetect
