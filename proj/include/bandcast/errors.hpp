#pragma once

#include <stdexcept>
#include <string>

namespace bandcast {

// Bad or inconsistent configuration / inputs that violate a precondition.
// CLI maps this to exit code 2.
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// A stage input file that should exist does not. CLI exit code 3.
struct MissingInputError : std::runtime_error {
    explicit MissingInputError(const std::string& msg) : std::runtime_error(msg) {}
};

// Numeric failure: non-convergence, undefined statistic, degenerate data.
// CLI exit code 4.
struct NumericError : std::runtime_error {
    explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

// Point falls outside the grid extent; callers may catch and drop.
struct OutOfExtentError : std::runtime_error {
    explicit OutOfExtentError(const std::string& msg) : std::runtime_error(msg) {}
};

struct IoError : std::runtime_error {
    explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace bandcast
