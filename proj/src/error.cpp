#include "abk/error.hpp"

namespace abk {

std::string_view ToString(ErrorCode code) {
  switch (code) {
    case ErrorCode::kSizeMismatch: return "SizeMismatch";
    case ErrorCode::kDegenerateBlock: return "DegenerateBlock";
    case ErrorCode::kIndexOutOfRange: return "IndexOutOfRange";
    case ErrorCode::kDomainError: return "DomainError";
    case ErrorCode::kInvalidState: return "InvalidState";
    case ErrorCode::kDegenerateTrace: return "DegenerateTrace";
    case ErrorCode::kInvalidConfig: return "InvalidConfig";
    case ErrorCode::kIoError: return "IoError";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& what)
    : std::runtime_error(std::string(ToString(code)) + ": " + what),
      code_(code) {}

}  // namespace abk
