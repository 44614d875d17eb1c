#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace thermfuse::dsconv {

/// Feature map stored height-major, then width, then channel.
class Tensor3 {
 public:
  Tensor3() = default;
  Tensor3(std::size_t height, std::size_t width, std::size_t channels, double fill = 0.0);
  Tensor3(std::size_t height, std::size_t width, std::size_t channels, std::vector<double> data);

  std::size_t height() const noexcept { return height_; }
  std::size_t width() const noexcept { return width_; }
  std::size_t channels() const noexcept { return channels_; }
  const std::vector<double>& data() const noexcept { return data_; }

  double& operator()(std::size_t y, std::size_t x, std::size_t c) {
    return data_[(y * width_ + x) * channels_ + c];
  }
  double operator()(std::size_t y, std::size_t x, std::size_t c) const {
    return data_[(y * width_ + x) * channels_ + c];
  }

 private:
  std::size_t height_ = 0, width_ = 0, channels_ = 0;
  std::vector<double> data_;
};

/// Square odd kernel, stride 1, zero "same" padding.
struct ConvSpec {
  std::size_t kernel = 3;
  std::size_t in_channels = 1;
  std::size_t out_channels = 1;

  void validate() const;
};

struct MacCount {
  std::uint64_t macs = 0;
  friend bool operator==(const MacCount&, const MacCount&) = default;
};

/// Full kernel K(ky, kx, m, n).
class StandardKernel {
 public:
  StandardKernel(std::size_t kernel, std::size_t in_channels, std::size_t out_channels,
                 double fill = 0.0);
  std::size_t kernel() const noexcept { return k_; }
  std::size_t in_channels() const noexcept { return m_; }
  std::size_t out_channels() const noexcept { return n_; }
  double& operator()(std::size_t ky, std::size_t kx, std::size_t m, std::size_t n) {
    return data_[((ky * k_ + kx) * m_ + m) * n_ + n];
  }
  double operator()(std::size_t ky, std::size_t kx, std::size_t m, std::size_t n) const {
    return data_[((ky * k_ + kx) * m_ + m) * n_ + n];
  }

 private:
  std::size_t k_, m_, n_;
  std::vector<double> data_;
};

/// One spatial filter per input channel, D(ky, kx, m).
class DepthwiseKernel {
 public:
  DepthwiseKernel(std::size_t kernel, std::size_t channels, double fill = 0.0);
  std::size_t kernel() const noexcept { return k_; }
  std::size_t channels() const noexcept { return m_; }
  double& operator()(std::size_t ky, std::size_t kx, std::size_t m) {
    return data_[(ky * k_ + kx) * m_ + m];
  }
  double operator()(std::size_t ky, std::size_t kx, std::size_t m) const {
    return data_[(ky * k_ + kx) * m_ + m];
  }

 private:
  std::size_t k_, m_;
  std::vector<double> data_;
};

/// 1x1 channel mixing matrix P(m, n).
class PointwiseKernel {
 public:
  PointwiseKernel(std::size_t in_channels, std::size_t out_channels, double fill = 0.0);
  std::size_t in_channels() const noexcept { return m_; }
  std::size_t out_channels() const noexcept { return n_; }
  double& operator()(std::size_t m, std::size_t n) { return data_[m * n_ + n]; }
  double operator()(std::size_t m, std::size_t n) const { return data_[m * n_ + n]; }

 private:
  std::size_t m_, n_;
  std::vector<double> data_;
};

struct ConvResult {
  Tensor3 output;
  MacCount cost;
};

/// Cross-correlation. Multiplies against padded zeros are counted, so the
/// cost is exactly  k^2 * M * N * H * W.
ConvResult conv_standard(const Tensor3& input, const StandardKernel& kernel);
ConvResult conv_depthwise(const Tensor3& input, const DepthwiseKernel& kernel);
ConvResult conv_pointwise(const Tensor3& input, const PointwiseKernel& kernel);

/// Depthwise followed by pointwise; cost is the sum of both stages.
ConvResult separable(const Tensor3& input, const DepthwiseKernel& depthwise,
                     const PointwiseKernel& pointwise);

/// K(ky, kx, m, n) = D(ky, kx, m) * P(m, n).
StandardKernel outer_product(const DepthwiseKernel& depthwise, const PointwiseKernel& pointwise);

/// Reduced non-negative fraction.
struct Rational {
  std::uint64_t num = 0;
  std::uint64_t den = 1;

  static Rational make(std::uint64_t num, std::uint64_t den);
  double value() const { return static_cast<double>(num) / static_cast<double>(den); }
  std::string str() const;
  friend bool operator==(const Rational&, const Rational&) = default;
};

/// Separable-over-standard cost in closed form: 1/N + 1/k^2.
Rational cost_ratio(const ConvSpec& spec);

/// Closed-form MAC counts for an H x W map.
std::uint64_t standard_macs(const ConvSpec& spec, std::size_t height, std::size_t width);
std::uint64_t separable_macs(const ConvSpec& spec, std::size_t height, std::size_t width);

}  // namespace thermfuse::dsconv
