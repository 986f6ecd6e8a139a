#pragma once

#include <stdexcept>
#include <string>

namespace synthtab {

// Validation failures map to CLI exit code 1, everything else to 2.
struct ValidationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Non-finite values, diverging losses, degenerate numeric input.
struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Malformed or version-incompatible serialized artifacts.
struct FormatError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

} // namespace synthtab
