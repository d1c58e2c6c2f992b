#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace abk {

enum class ErrorCode {
  kSizeMismatch,
  kDegenerateBlock,
  kIndexOutOfRange,
  kDomainError,
  kInvalidState,
  kDegenerateTrace,
  kInvalidConfig,
  kIoError,
};

std::string_view ToString(ErrorCode code);

// Every error raised by the library carries one of the codes above so the
// CLI can map failures onto exit statuses.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what);

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace abk
