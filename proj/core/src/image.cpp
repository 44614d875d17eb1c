#include "thermfuse/image.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace thermfuse {

std::size_t BinaryMask::count() const {
  return static_cast<std::size_t>(
      std::count_if(bits.pixels().begin(), bits.pixels().end(),
                    [](std::uint8_t b) { return b != 0; }));
}

std::uint64_t Histogram::total() const {
  return std::accumulate(counts.begin(), counts.end(), std::uint64_t{0});
}

RealImage to_real(const GrayImage& img) {
  RealImage out(img.width(), img.height());
  std::transform(img.pixels().begin(), img.pixels().end(), out.pixels().begin(),
                 [](std::uint8_t v) { return static_cast<double>(v); });
  return out;
}

std::uint8_t saturate_round(double v) {
  // std::round rounds halfway cases away from zero.
  const double r = std::round(std::clamp(v, 0.0, 255.0));
  return static_cast<std::uint8_t>(r);
}

GrayImage quantize(const RealImage& img) {
  GrayImage out(img.width(), img.height());
  for (std::size_t i = 0; i < img.size(); ++i) {
    if (!std::isfinite(img[i])) {
      throw Error(ErrorKind::kNumeric, "cannot quantize a non-finite sample");
    }
    out[i] = saturate_round(img[i]);
  }
  return out;
}

}  // namespace thermfuse
