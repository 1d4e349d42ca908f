#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace xmorph {

// Every failure the library can report. The CLI maps each code to a
// distinct process exit status (see exit_status()).
enum class ErrorCode {
    InvalidArgument,
    MissingFile,
    SchemaViolation,
    DimensionMismatch,
    UnknownName,
    NonFiniteFeature,
    SignalTooShort,
    TooFewFrames,
    TooFewBands,
    TooFewSamples,
    EmptyInput,
    MixedContext,
    ContextMismatch,
    UnknownLabel,
    EmptyCorrespondence,
    NonFiniteLoss,
    NonPositiveBandwidth,
    EmptyDomain,
    DegenerateLabels,
    NotSymmetric,
    CholeskyFailure,
    UnknownDomain,
    SingleClass,
    InconsistentClassSets,
    AllZeroWeights,
    TooFewBudgets,
    BudgetExceedsPool,
    InsufficientUniqueObjects,
    InvalidConfig,
    IoError,
};

std::string_view to_string(ErrorCode code);

// 0 is success, 1 is reserved for unexpected exceptions, 2 for usage errors.
int exit_status(ErrorCode code);

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

}  // namespace xmorph
