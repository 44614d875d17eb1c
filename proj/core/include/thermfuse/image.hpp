#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "thermfuse/error.hpp"

namespace thermfuse {

/// Row-major single-channel raster. Dimensions are fixed at construction and
/// the sample buffer always holds exactly width * height values.
template <typename T>
class Raster {
 public:
  using value_type = T;

  Raster() = default;

  Raster(std::size_t width, std::size_t height, T fill = T{})
      : width_(width), height_(height), data_(width * height, fill) {
    check_dims();
  }

  Raster(std::size_t width, std::size_t height, std::vector<T> data)
      : width_(width), height_(height), data_(std::move(data)) {
    check_dims();
    if (data_.size() != width_ * height_) {
      throw Error(ErrorKind::kShape, "sample count does not match width*height");
    }
  }

  std::size_t width() const noexcept { return width_; }
  std::size_t height() const noexcept { return height_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  T& operator()(std::size_t row, std::size_t col) { return data_[row * width_ + col]; }
  const T& operator()(std::size_t row, std::size_t col) const {
    return data_[row * width_ + col];
  }

  T& operator[](std::size_t i) { return data_[i]; }
  const T& operator[](std::size_t i) const { return data_[i]; }

  std::span<T> pixels() noexcept { return data_; }
  std::span<const T> pixels() const noexcept { return data_; }

  bool same_shape(const auto& other) const noexcept {
    return width_ == other.width() && height_ == other.height();
  }

  friend bool operator==(const Raster&, const Raster&) = default;

 private:
  void check_dims() const {
    if (width_ == 0 || height_ == 0) {
      throw Error(ErrorKind::kShape, "raster dimensions must be at least 1x1");
    }
  }

  std::size_t width_ = 0;
  std::size_t height_ = 0;
  std::vector<T> data_;
};

using GrayImage = Raster<std::uint8_t>;
using RealImage = Raster<double>;

/// Foreground mask; one byte per pixel, nonzero means set.
struct BinaryMask {
  Raster<std::uint8_t> bits;

  BinaryMask() = default;
  BinaryMask(std::size_t width, std::size_t height) : bits(width, height, 0) {}

  std::size_t width() const noexcept { return bits.width(); }
  std::size_t height() const noexcept { return bits.height(); }
  bool at(std::size_t row, std::size_t col) const { return bits(row, col) != 0; }
  void set(std::size_t row, std::size_t col, bool on) { bits(row, col) = on ? 1 : 0; }
  std::size_t count() const;

  friend bool operator==(const BinaryMask&, const BinaryMask&) = default;
};

/// 256-bin intensity histogram.
struct Histogram {
  std::vector<std::uint64_t> counts = std::vector<std::uint64_t>(256, 0);

  std::uint64_t total() const;
};

RealImage to_real(const GrayImage& img);

/// Rounds half away from zero, clamps to [0, 255]. Throws a numeric error on
/// NaN or infinite samples.
GrayImage quantize(const RealImage& img);

/// Round half away from zero into [0, 255]; the one rounding rule used by
/// every 8-bit producer in the library.
std::uint8_t saturate_round(double v);

}  // namespace thermfuse
