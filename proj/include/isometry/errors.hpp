#pragma once

#include <stdexcept>
#include <string>

namespace isometry {

// Malformed user input: out-of-range parameters, dimension mismatches,
// unparseable network specs, requests beyond configured size limits.
struct InputError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// A composition theorem's precondition failed outright (for example, a
// parallel sum with two non-central branches). The analyzer refuses to emit a
// number instead of emitting a wrong one.
struct PrerequisiteError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// An iterative solver exhausted its budget without meeting its residual
// target. The message carries the last residuals.
struct ConvergenceError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace isometry
