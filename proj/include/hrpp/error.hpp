// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace hrpp {

enum class ErrorKind {
  EmptyScene,
  NonFiniteInput,
  CapacityExceeded,
  NoBaseline,
  ParseError,
  IndexOutOfRange,
  UnknownGenerator,
  InvalidArgument,
  FileNotFound,
  IoError,
};

inline std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::EmptyScene: return "EmptyScene";
    case ErrorKind::NonFiniteInput: return "NonFiniteInput";
    case ErrorKind::CapacityExceeded: return "CapacityExceeded";
    case ErrorKind::NoBaseline: return "NoBaseline";
    case ErrorKind::ParseError: return "ParseError";
    case ErrorKind::IndexOutOfRange: return "IndexOutOfRange";
    case ErrorKind::UnknownGenerator: return "UnknownGenerator";
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::FileNotFound: return "FileNotFound";
    case ErrorKind::IoError: return "IoError";
  }
  return "Unknown";
}

/// All library failures are reported through this exception; `kind()` lets
/// callers branch without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace hrpp
