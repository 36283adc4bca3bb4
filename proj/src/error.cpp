#include "ncd/error.hpp"

namespace ncd {

std::string_view to_string(ErrorCode code) noexcept {
    switch (code) {
        case ErrorCode::BadMagic: return "BadMagic";
        case ErrorCode::UnsupportedVersion: return "UnsupportedVersion";
        case ErrorCode::TruncatedFile: return "TruncatedFile";
        case ErrorCode::TrailingData: return "TrailingData";
        case ErrorCode::NonFiniteFeature: return "NonFiniteFeature";
        case ErrorCode::SplitOverlap: return "SplitOverlap";
        case ErrorCode::DimMismatch: return "DimMismatch";
        case ErrorCode::BadSplitTag: return "BadSplitTag";
        case ErrorCode::ParseError: return "ParseError";
        case ErrorCode::IoError: return "IoError";
        case ErrorCode::EmptyClass: return "EmptyClass";
        case ErrorCode::MissingPrototype: return "MissingPrototype";
        case ErrorCode::ZeroVector: return "ZeroVector";
        case ErrorCode::EmptyBanks: return "EmptyBanks";
        case ErrorCode::NovelBankEmpty: return "NovelBankEmpty";
        case ErrorCode::EmptySplit: return "EmptySplit";
        case ErrorCode::DuplicateClass: return "DuplicateClass";
        case ErrorCode::InfeasibleBudget: return "InfeasibleBudget";
        case ErrorCode::InfeasibleSpec: return "InfeasibleSpec";
        case ErrorCode::EmptyQuerySet: return "EmptyQuerySet";
        case ErrorCode::RejectionFailure: return "RejectionFailure";
        case ErrorCode::NoConvergence: return "NoConvergence";
        case ErrorCode::InvalidArgument: return "InvalidArgument";
    }
    return "Unknown";
}

bool is_infeasible(ErrorCode code) noexcept {
    switch (code) {
        case ErrorCode::InfeasibleBudget:
        case ErrorCode::InfeasibleSpec:
        case ErrorCode::EmptyQuerySet:
        case ErrorCode::RejectionFailure:
        case ErrorCode::NoConvergence:
            return true;
        default:
            return false;
    }
}

}  // namespace ncd
