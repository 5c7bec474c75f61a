#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace ctxcite {

enum class ErrorCode {
  kEmptyText,
  kOutOfBounds,
  kDimensionMismatch,
  kBadTemplate,
  kNonFinite,
  kProviderUnavailable,
  kContextTooLong,
  kTokenizationMismatch,
  kAbortedAfterRetries,
  kDegenerateRanks,
  kUndefinedWeight,
  kEmptySelection,
  kInvalidArgument,
  kBadConfig,
};

std::string_view ErrorCodeName(ErrorCode code);

// Every failure surfaced by the library carries one of the codes above so
// that the CLI and HTTP layers can map it to an exit code or status.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

  // True for failures caused by the model endpoint rather than the input.
  bool IsProviderFailure() const noexcept {
    return code_ == ErrorCode::kProviderUnavailable ||
           code_ == ErrorCode::kContextTooLong ||
           code_ == ErrorCode::kTokenizationMismatch ||
           code_ == ErrorCode::kAbortedAfterRetries;
  }

 private:
  ErrorCode code_;
};

// Raised by the scheduler when a provider call keeps failing.
class AbortedAfterRetries : public Error {
 public:
  AbortedAfterRetries(std::size_t index, const std::string& cause)
      : Error(ErrorCode::kAbortedAfterRetries,
              "ablation " + std::to_string(index) +
                  " failed after retries: " + cause),
        index_(index) {}

  std::size_t index() const noexcept { return index_; }

 private:
  std::size_t index_;
};

}  // namespace ctxcite
