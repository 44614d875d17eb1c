#pragma once

#include <stdexcept>
#include <string>

namespace thermfuse {

/// Failure categories surfaced by the library. The CLI maps every kind to
/// exit code 1; only argument parsing produces exit code 2.
enum class ErrorKind {
  kFormat,
  kTruncation,
  kUnsupportedDepth,
  kParameter,
  kEmptyForeground,
  kRegistration,
  kBounds,
  kNumeric,
  kShape,
  kProtocol,
  kIo,
};

const char* to_string(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + " error: " + what),
        kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace thermfuse
