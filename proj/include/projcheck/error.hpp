#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace projcheck {

enum class ErrorCode {
    InvalidArgument,
    IndexOutOfRange,
    SpaceTooLarge,
    NotNested,
    IncompleteTable,
    MissingCovariates,
    IncompatibleStatistic,
    BoundaryObservation,
    MaxIterations,
    Degenerate,
    SchemaError,
    UnknownStatistic,
    InternalInconsistency,
};

/// Stable machine-readable name, e.g. "SpaceTooLarge".
std::string_view to_string(ErrorCode code);

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(message), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
    throw Error(code, message);
}

} // namespace projcheck
