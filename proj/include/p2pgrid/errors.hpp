#pragma once

#include <stdexcept>
#include <string>

namespace p2pgrid {

// Error taxonomy mirrors the CLI exit codes:
// parse -> 2, validation -> 3, solver -> 4, invariant breach in check mode -> 5.
struct ParseError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ValidationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct SolverError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct InvariantError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

} // namespace p2pgrid
