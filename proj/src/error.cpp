#include "hamroc/error.hpp"

namespace hamroc {

std::string_view to_string(ErrorCode code) {
    switch (code) {
        case ErrorCode::DimensionMismatch: return "DimensionMismatch";
        case ErrorCode::NotSPD: return "NotSPD";
        case ErrorCode::RankDeficient: return "RankDeficient";
        case ErrorCode::RankDeficientJacobian: return "RankDeficientJacobian";
        case ErrorCode::InvalidConfig: return "InvalidConfig";
        case ErrorCode::DegenerateSpring: return "DegenerateSpring";
        case ErrorCode::IndexOutOfRange: return "IndexOutOfRange";
        case ErrorCode::PinnedNode: return "PinnedNode";
        case ErrorCode::NumericalBlowup: return "NumericalBlowup";
        case ErrorCode::RejectionExhausted: return "RejectionExhausted";
        case ErrorCode::NonFiniteLoss: return "NonFiniteLoss";
        case ErrorCode::NonFiniteValue: return "NonFiniteValue";
        case ErrorCode::SchemaViolation: return "SchemaViolation";
        case ErrorCode::MissingFile: return "MissingFile";
        case ErrorCode::IoFailure: return "IoFailure";
    }
    return "Unknown";
}

int exit_code(ErrorCode code) {
    // 1 is reserved for unexpected exceptions, 2 for usage errors.
    return 10 + static_cast<int>(code);
}

}  // namespace hamroc
