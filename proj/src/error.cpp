#include "usstyle/error.hpp"

namespace usstyle {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::FileNotFound: return "file not found";
    case ErrorCode::UnsupportedFormat: return "unsupported format";
    case ErrorCode::CorruptData: return "corrupt data";
    case ErrorCode::Io: return "i/o error";
    case ErrorCode::Shape: return "shape error";
    case ErrorCode::InvalidArgument: return "invalid argument";
    case ErrorCode::Format: return "format error";
    case ErrorCode::Truncated: return "truncated data";
  }
  return "unknown error";
}

}  // namespace usstyle
