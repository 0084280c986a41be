#pragma once

#include <stdexcept>
#include <string>

namespace topoplan {

// Malformed input file or grammar violation.
struct ParseError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// A constructed object violates a documented contract.
struct ValidationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// The task cannot be satisfied from the initial automaton mode.
struct UnsatisfiableTaskError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// A solver diverged or hit an iteration guard.
struct SolverError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace topoplan
