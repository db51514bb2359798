#pragma once

#include <stdexcept>
#include <string>

namespace atomgrid {

/// Malformed input text: bad JSON, wrong field type, unknown key.
struct ParseError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Well-formed input that violates a model invariant (duplicate bus id,
/// dangling branch endpoint, missing slack, ...).
struct SemanticError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Numerical failure: non-convergence or a singular system.
struct NumericsError : std::runtime_error {
    explicit NumericsError(const std::string& msg, double residual = 0.0)
        : std::runtime_error(msg), final_residual(residual) {}
    double final_residual;
};

/// A "cannot happen" condition; indicates a bug in atomgrid itself.
struct InternalError : std::logic_error {
    using std::logic_error::logic_error;
};

} // namespace atomgrid
