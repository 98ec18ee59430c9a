#pragma once

#include <stdexcept>
#include <string>

namespace fieldloc {

// Process exit codes used by the CLI. Library code throws; only main() maps.
enum ExitCode : int {
    kExitOk = 0,
    kExitValidation = 2,
    kExitNumeric = 3,
    kExitIo = 4,
};

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Tensor shape disagreement (matmul inner dims, concat, broadcast).
struct DimensionError : Error {
    using Error::Error;
};

// Mathematical domain violation: log/sqrt of non-positives, kappa < 0,
// sigma^2 <= 0.
struct DomainError : Error {
    using Error::Error;
};

// Caller broke an API precondition (non-scalar loss, non-unit vector,
// out-of-range coordinate, empty input).
struct ContractError : Error {
    using Error::Error;
};

// NaN/Inf surfaced in a computation; message carries the producing op.
struct NumericError : Error {
    using Error::Error;
};

// Requested a head or loss that the current mode does not enable.
struct UnsupportedModeError : Error {
    using Error::Error;
};

// Checkpoint/manifest failed structural or checksum validation; message
// names the failing section.
struct IntegrityError : Error {
    using Error::Error;
};

// Config rejected before any work started.
struct ValidationError : Error {
    using Error::Error;
};

struct IoError : Error {
    using Error::Error;
};

}  // namespace fieldloc
