#pragma once

#include <stdexcept>
#include <string>

namespace lifestyles {

// Bad parameter values or inconsistent configuration blocks.
struct ConfigError : std::invalid_argument {
    explicit ConfigError(const std::string& msg) : std::invalid_argument(msg) {}
};

// Input outside a function's mathematical domain (zero vector, k < 2, ...).
struct DomainError : std::invalid_argument {
    explicit DomainError(const std::string& msg) : std::invalid_argument(msg) {}
};

// Mismatched vector / matrix dimensions.
struct DimensionError : std::invalid_argument {
    explicit DimensionError(const std::string& msg) : std::invalid_argument(msg) {}
};

// Unreadable or malformed input file; carries the offending line when known.
struct ParseError : std::runtime_error {
    explicit ParseError(const std::string& msg, long line = -1)
        : std::runtime_error(line >= 0 ? msg + " (line " + std::to_string(line) + ")" : msg),
          line_number(line) {}
    long line_number;
};

// Structurally valid input that violates coverage requirements
// (missing hours, date gaps, unequal household ranges).
struct CompletenessError : std::runtime_error {
    explicit CompletenessError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace lifestyles
