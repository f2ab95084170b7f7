#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace lmc {

enum class ErrorKind {
  Alignment,          // buffer length is not a whole number of elements
  Shape,              // buffers that must match in length do not
  Type,               // element types that must match do not
  EmptyInput,
  Input,              // other invalid caller input (bad option values, bad ranges)
  MalformedCodebook,
  MalformedInput,     // symbol without a code, etc.
  CorruptStream,
  UnsupportedFormat,  // bad magic or unknown version
  Integrity,          // CRC mismatch
  Config,             // unknown codec name, unavailable adapter
  Missing,            // a referenced file does not exist
  Io,
};

std::string_view to_string(ErrorKind kind) noexcept;

/// The single exception type thrown by the library. The kind is stable and
/// is what the CLI maps onto exit codes.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message);

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace lmc
