#pragma once

#include <stdexcept>
#include <string>

namespace sbn {

/// Caller passed arguments that cannot be acted on (bad ranges, empty
/// inputs, unknown flags). Maps to CLI exit code 1.
struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Model or layer wiring is inconsistent (dimension mismatches, cache
/// reuse across different nets). Maps to CLI exit code 1.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Input data is unreadable or malformed. Maps to CLI exit code 2.
struct DataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// A computation produced or received non-finite values. Maps to CLI
/// exit code 3.
struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

} // namespace sbn
