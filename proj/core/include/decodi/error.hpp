#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace decodi {

// Base class for all library errors.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Invalid inputs, malformed configs, schema mismatches. CLI exit code 1.
struct ValidationError : Error {
    using Error::Error;
};

// Unknown condition id, attribute name, or builtin world name.
struct LookupError : ValidationError {
    using ValidationError::ValidationError;
};

// Step index outside the valid range for the operation.
struct StepRangeError : ValidationError {
    using ValidationError::ValidationError;
};

// Operation invoked out of sequence, e.g. more combine calls than steps.
struct ProtocolError : ValidationError {
    using ValidationError::ValidationError;
};

// Contingency table left with fewer than two usable categories.
struct DegenerateTableError : ValidationError {
    using ValidationError::ValidationError;
};

// Non-finite value produced during sampling. CLI exit code 2.
class NumericError : public Error {
public:
    NumericError(const std::string& what, std::uint64_t seed, int step)
        : Error(what), seed_(seed), step_(step) {}

    std::uint64_t seed() const noexcept { return seed_; }
    int step() const noexcept { return step_; }

private:
    std::uint64_t seed_ = 0;
    int step_ = -1;
};

// Filesystem or serialization failure. CLI exit code 3.
struct IoError : Error {
    using Error::Error;
};

}  // namespace decodi
