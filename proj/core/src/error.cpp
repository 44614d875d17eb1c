#include "thermfuse/error.hpp"

namespace thermfuse {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kFormat: return "format";
    case ErrorKind::kTruncation: return "truncation";
    case ErrorKind::kUnsupportedDepth: return "unsupported-depth";
    case ErrorKind::kParameter: return "parameter";
    case ErrorKind::kEmptyForeground: return "empty-foreground";
    case ErrorKind::kRegistration: return "registration";
    case ErrorKind::kBounds: return "bounds";
    case ErrorKind::kNumeric: return "numeric";
    case ErrorKind::kShape: return "shape";
    case ErrorKind::kProtocol: return "protocol";
    case ErrorKind::kIo: return "io";
  }
  return "unknown";
}

}  // namespace thermfuse
