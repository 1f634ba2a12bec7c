#pragma once

#include <stdexcept>
#include <string>

namespace fastslow {

// Every failure the library can raise, one enumerator per contract-level
// error condition. The CLI maps these onto process exit codes; the names
// also show up in test expectations, so keep them stable.
enum class ErrorKind {
    InvalidParameter,
    InvalidMatrix,
    InvalidMeasure,
    InvalidPartition,
    InvalidInitialState,
    InvalidVelocity,
    InvalidCurve,
    NonUniqueEquilibrium,
    NonUniqueLimit,
    RequiresDetailedBalance,
    BoundaryState,
    UnboundedOrDegenerate,
    DualityGap,
    InternalConsistency,
    OutOfRange,
    ConfigError,
    NumericalFailure,
};

const char* error_kind_name(ErrorKind kind);

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message)
        : std::runtime_error(std::string(error_kind_name(kind)) + ": " + message),
          kind_(kind) {}

    ErrorKind kind() const { return kind_; }

private:
    ErrorKind kind_;
};

}  // namespace fastslow
