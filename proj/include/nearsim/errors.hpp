#pragma once

#include <stdexcept>
#include <string>

namespace nearsim {

struct SimError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// schedule() with fire_at < now().
struct PastEventError : SimError {
    using SimError::SimError;
};

// Hash table occupancy pushed beyond the 95% probing guard.
struct TableFullError : SimError {
    using SimError::SimError;
};

struct AddressOutOfRangeError : SimError {
    using SimError::SimError;
};

struct MalformedRequestError : SimError {
    using SimError::SimError;
};

// Bad or unknown configuration key/value; message carries the key path.
struct ConfigError : SimError {
    using SimError::SimError;
};

// Trace line rejected; message carries line number and reason.
struct ParseError : SimError {
    ParseError(std::size_t line, const std::string& reason)
        : SimError("line " + std::to_string(line) + ": " + reason), line_no(line) {}
    std::size_t line_no;
};

// Trace addresses do not land in the expected memory regions.
struct TraceMismatchError : SimError {
    using SimError::SimError;
};

// Reference CSV cross-product does not match the produced rows.
struct KeyMismatchError : SimError {
    using SimError::SimError;
};

}  // namespace nearsim
