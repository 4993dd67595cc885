#pragma once

#include <stdexcept>
#include <string>

namespace qboot {

enum class ErrorCode {
  kDomain,
  kRange,
  kIndex,
  kNonUnitary,
  kCapExceeded,
  kEnumerationTooLarge,
  kGridMismatch,
  kNoCircuitForm,
  kRegisterNotClean,
  kMTooLarge,
  kEmptyInput,
  kConfig,
};

inline const char* error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kDomain: return "DomainError";
    case ErrorCode::kRange: return "RangeError";
    case ErrorCode::kIndex: return "IndexError";
    case ErrorCode::kNonUnitary: return "NonUnitary";
    case ErrorCode::kCapExceeded: return "CapExceeded";
    case ErrorCode::kEnumerationTooLarge: return "EnumerationTooLarge";
    case ErrorCode::kGridMismatch: return "GridMismatch";
    case ErrorCode::kNoCircuitForm: return "NoCircuitForm";
    case ErrorCode::kRegisterNotClean: return "RegisterNotClean";
    case ErrorCode::kMTooLarge: return "MTooLarge";
    case ErrorCode::kEmptyInput: return "EmptyInput";
    case ErrorCode::kConfig: return "ConfigError";
  }
  return "Error";
}

/// Every failure raised by the library carries one of the codes above so the
/// CLI can map it to an exit status without string matching.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(error_code_name(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace qboot
