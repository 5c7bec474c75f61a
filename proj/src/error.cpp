#include "ctxcite/error.hpp"

namespace ctxcite {

std::string_view ErrorCodeName(ErrorCode code) {
  switch (code) {
    case ErrorCode::kEmptyText: return "EmptyText";
    case ErrorCode::kOutOfBounds: return "OutOfBounds";
    case ErrorCode::kDimensionMismatch: return "DimensionMismatch";
    case ErrorCode::kBadTemplate: return "BadTemplate";
    case ErrorCode::kNonFinite: return "NonFinite";
    case ErrorCode::kProviderUnavailable: return "ProviderUnavailable";
    case ErrorCode::kContextTooLong: return "ContextTooLong";
    case ErrorCode::kTokenizationMismatch: return "TokenizationMismatch";
    case ErrorCode::kAbortedAfterRetries: return "AbortedAfterRetries";
    case ErrorCode::kDegenerateRanks: return "DegenerateRanks";
    case ErrorCode::kUndefinedWeight: return "UndefinedWeight";
    case ErrorCode::kEmptySelection: return "EmptySelection";
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kBadConfig: return "BadConfig";
  }
  return "Unknown";
}

}  // namespace ctxcite
