#include "lmc/error.hpp"

namespace lmc {

std::string_view to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::Alignment: return "alignment";
    case ErrorKind::Shape: return "shape";
    case ErrorKind::Type: return "type";
    case ErrorKind::EmptyInput: return "empty-input";
    case ErrorKind::Input: return "input";
    case ErrorKind::MalformedCodebook: return "malformed-codebook";
    case ErrorKind::MalformedInput: return "malformed-input";
    case ErrorKind::CorruptStream: return "corrupt-stream";
    case ErrorKind::UnsupportedFormat: return "unsupported-format";
    case ErrorKind::Integrity: return "integrity";
    case ErrorKind::Config: return "config";
    case ErrorKind::Missing: return "missing";
    case ErrorKind::Io: return "io";
  }
  return "unknown";
}

Error::Error(ErrorKind kind, const std::string& message)
    : std::runtime_error(std::string(to_string(kind)) + " error: " + message), kind_(kind) {}

}  // namespace lmc
