#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace usstyle {

enum class ErrorCode {
  FileNotFound,
  UnsupportedFormat,
  CorruptData,
  Io,
  Shape,
  InvalidArgument,
  Format,
  Truncated,
};

std::string_view to_string(ErrorCode code);

// Every library failure is reported as an Error carrying a code that tests
// and the CLI can dispatch on.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace usstyle
