#include "projcheck/error.hpp"

namespace projcheck {

std::string_view to_string(ErrorCode code) {
    switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::IndexOutOfRange: return "IndexOutOfRange";
    case ErrorCode::SpaceTooLarge: return "SpaceTooLarge";
    case ErrorCode::NotNested: return "NotNested";
    case ErrorCode::IncompleteTable: return "IncompleteTable";
    case ErrorCode::MissingCovariates: return "MissingCovariates";
    case ErrorCode::IncompatibleStatistic: return "IncompatibleStatistic";
    case ErrorCode::BoundaryObservation: return "BoundaryObservation";
    case ErrorCode::MaxIterations: return "MaxIterations";
    case ErrorCode::Degenerate: return "Degenerate";
    case ErrorCode::SchemaError: return "SchemaError";
    case ErrorCode::UnknownStatistic: return "UnknownStatistic";
    case ErrorCode::InternalInconsistency: return "InternalInconsistency";
    }
    return "Unknown";
}

} // namespace projcheck
