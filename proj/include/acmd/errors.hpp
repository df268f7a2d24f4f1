#pragma once

#include <stdexcept>
#include <string>

namespace acmd {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Invalid argument or configuration value.
struct ParameterError : Error {
    using Error::Error;
};

// Frame synchronization correlation peak below threshold.
struct SyncFailure : Error {
    using Error::Error;
};

// Sample/symbol count mismatch after decimation.
struct FramingError : Error {
    using Error::Error;
};

// Non-finite filter state (NaN/inf taps).
struct StateError : Error {
    using Error::Error;
};

// Adaptive training diverged.
struct TrainingFailure : Error {
    using Error::Error;
};

// Linear system not positive definite or too ill-conditioned to solve.
struct ConditioningError : Error {
    using Error::Error;
};

// Requested trellis exceeds the configured state budget.
struct CapacityError : Error {
    using Error::Error;
};

} // namespace acmd
