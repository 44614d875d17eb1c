#pragma once

#include <gtest/gtest.h>

#include "thermfuse/error.hpp"

namespace thermfuse::testing {

/// Kind of the thermfuse::Error thrown by `fn`; records a failure when
/// nothing is thrown.
template <class Fn>
ErrorKind kind_of(Fn&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "no thermfuse::Error thrown";
  return ErrorKind::kIo;
}

}  // namespace thermfuse::testing
