#pragma once

#include "thermfuse/image.hpp"

namespace thermfuse {

/// Co-registered thermal (`ir`) and visible (`vi`) fields of equal size.
struct RegisteredPair {
  RealImage ir;
  RealImage vi;

  RegisteredPair() = default;
  RegisteredPair(RealImage thermal, RealImage visible)
      : ir(std::move(thermal)), vi(std::move(visible)) {
    if (!ir.same_shape(vi)) {
      throw Error(ErrorKind::kRegistration, "thermal and visible images differ in size");
    }
  }

  std::size_t width() const noexcept { return ir.width(); }
  std::size_t height() const noexcept { return ir.height(); }
};

}  // namespace thermfuse
