#pragma once

#include <stdexcept>
#include <string>

namespace mapflow {

// Bad user input: malformed config files, out-of-range options, missing files.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Numeric failure at runtime: diverging loss, non-finite values.
struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

} // namespace mapflow
