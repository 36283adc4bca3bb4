#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace ncd {

enum class ErrorCode {
    // Data / format errors.
    BadMagic,
    UnsupportedVersion,
    TruncatedFile,
    TrailingData,
    NonFiniteFeature,
    SplitOverlap,
    DimMismatch,
    BadSplitTag,
    ParseError,
    IoError,
    EmptyClass,
    MissingPrototype,
    ZeroVector,
    EmptyBanks,
    NovelBankEmpty,
    EmptySplit,
    DuplicateClass,
    // Infeasible requests.
    InfeasibleBudget,
    InfeasibleSpec,
    EmptyQuerySet,
    RejectionFailure,
    NoConvergence,
    // Caller supplied nonsense.
    InvalidArgument,
};

std::string_view to_string(ErrorCode code) noexcept;

/// True for the codes the CLI reports as "infeasible spec" (exit code 4).
bool is_infeasible(ErrorCode code) noexcept;

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

}  // namespace ncd
