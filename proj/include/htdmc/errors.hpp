#pragma once

#include <stdexcept>
#include <string>

namespace htdmc {

// Error taxonomy mirrored by the CLI exit codes:
// validation -> 2, precondition -> 3, simulator guard -> 4.

struct ValidationError : std::runtime_error {
    explicit ValidationError(const std::string& msg) : std::runtime_error(msg) {}
};

// Axis/shape mismatches between probability objects.
struct DimensionError : ValidationError {
    explicit DimensionError(const std::string& msg) : ValidationError(msg) {}
};

// Out-of-range scalar arguments (e.g. entropy inverse outside [0,1]).
struct DomainError : ValidationError {
    explicit DomainError(const std::string& msg) : ValidationError(msg) {}
};

// Scheme-specific requirements (tau=1, identical channel rows, TACI structure, ...).
struct PreconditionError : std::runtime_error {
    explicit PreconditionError(const std::string& msg) : std::runtime_error(msg) {}
};

// Resource guards (bin explosion, Monte Carlo below resolution, grid blowup).
struct GuardError : std::runtime_error {
    explicit GuardError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace htdmc
