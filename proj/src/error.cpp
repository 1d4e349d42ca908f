#include "xmorph/error.hpp"

namespace xmorph {

std::string_view to_string(ErrorCode code) {
    switch (code) {
        case ErrorCode::InvalidArgument: return "InvalidArgument";
        case ErrorCode::MissingFile: return "MissingFile";
        case ErrorCode::SchemaViolation: return "SchemaViolation";
        case ErrorCode::DimensionMismatch: return "DimensionMismatch";
        case ErrorCode::UnknownName: return "UnknownName";
        case ErrorCode::NonFiniteFeature: return "NonFiniteFeature";
        case ErrorCode::SignalTooShort: return "SignalTooShort";
        case ErrorCode::TooFewFrames: return "TooFewFrames";
        case ErrorCode::TooFewBands: return "TooFewBands";
        case ErrorCode::TooFewSamples: return "TooFewSamples";
        case ErrorCode::EmptyInput: return "EmptyInput";
        case ErrorCode::MixedContext: return "MixedContext";
        case ErrorCode::ContextMismatch: return "ContextMismatch";
        case ErrorCode::UnknownLabel: return "UnknownLabel";
        case ErrorCode::EmptyCorrespondence: return "EmptyCorrespondence";
        case ErrorCode::NonFiniteLoss: return "NonFiniteLoss";
        case ErrorCode::NonPositiveBandwidth: return "NonPositiveBandwidth";
        case ErrorCode::EmptyDomain: return "EmptyDomain";
        case ErrorCode::DegenerateLabels: return "DegenerateLabels";
        case ErrorCode::NotSymmetric: return "NotSymmetric";
        case ErrorCode::CholeskyFailure: return "CholeskyFailure";
        case ErrorCode::UnknownDomain: return "UnknownDomain";
        case ErrorCode::SingleClass: return "SingleClass";
        case ErrorCode::InconsistentClassSets: return "InconsistentClassSets";
        case ErrorCode::AllZeroWeights: return "AllZeroWeights";
        case ErrorCode::TooFewBudgets: return "TooFewBudgets";
        case ErrorCode::BudgetExceedsPool: return "BudgetExceedsPool";
        case ErrorCode::InsufficientUniqueObjects: return "InsufficientUniqueObjects";
        case ErrorCode::InvalidConfig: return "InvalidConfig";
        case ErrorCode::IoError: return "IoError";
    }
    return "Unknown";
}

int exit_status(ErrorCode code) {
    return 10 + static_cast<int>(code);
}

}  // namespace xmorph
