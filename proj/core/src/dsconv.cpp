#include "thermfuse/dsconv.hpp"

#include <cmath>
#include <numeric>

#include "thermfuse/error.hpp"

namespace thermfuse::dsconv {

namespace {

void require(bool ok, const char* what) {
  if (!ok) throw Error(ErrorKind::kShape, what);
}

void check_kernel_size(std::size_t k) { require(k >= 1 && k % 2 == 1, "kernel size must be odd"); }

}  // namespace

Tensor3::Tensor3(std::size_t height, std::size_t width, std::size_t channels, double fill)
    : height_(height), width_(width), channels_(channels),
      data_(height * width * channels, fill) {
  require(height >= 1 && width >= 1 && channels >= 1, "tensor dimensions must be positive");
}

Tensor3::Tensor3(std::size_t height, std::size_t width, std::size_t channels,
                 std::vector<double> data)
    : height_(height), width_(width), channels_(channels), data_(std::move(data)) {
  require(height >= 1 && width >= 1 && channels >= 1, "tensor dimensions must be positive");
  require(data_.size() == height * width * channels, "tensor data length mismatch");
  for (double v : data_) {
    if (!std::isfinite(v)) throw Error(ErrorKind::kNumeric, "tensor contains non-finite values");
  }
}

void ConvSpec::validate() const {
  check_kernel_size(kernel);
  require(in_channels >= 1 && out_channels >= 1, "channel counts must be positive");
}

StandardKernel::StandardKernel(std::size_t kernel, std::size_t in_channels,
                               std::size_t out_channels, double fill)
    : k_(kernel), m_(in_channels), n_(out_channels),
      data_(kernel * kernel * in_channels * out_channels, fill) {
  ConvSpec{kernel, in_channels, out_channels}.validate();
}

DepthwiseKernel::DepthwiseKernel(std::size_t kernel, std::size_t channels, double fill)
    : k_(kernel), m_(channels), data_(kernel * kernel * channels, fill) {
  ConvSpec{kernel, channels, 1}.validate();
}

PointwiseKernel::PointwiseKernel(std::size_t in_channels, std::size_t out_channels, double fill)
    : m_(in_channels), n_(out_channels), data_(in_channels * out_channels, fill) {
  require(in_channels >= 1 && out_channels >= 1, "channel counts must be positive");
}

ConvResult conv_standard(const Tensor3& input, const StandardKernel& kernel) {
  require(input.channels() == kernel.in_channels(), "input channels do not match the kernel");
  const auto h = static_cast<std::ptrdiff_t>(input.height());
  const auto w = static_cast<std::ptrdiff_t>(input.width());
  const auto k = static_cast<std::ptrdiff_t>(kernel.kernel());
  const std::ptrdiff_t r = k / 2;
  const std::size_t m_count = kernel.in_channels();
  const std::size_t n_count = kernel.out_channels();

  ConvResult res{Tensor3(input.height(), input.width(), n_count), {}};
  std::uint64_t macs = 0;
  for (std::ptrdiff_t y = 0; y < h; ++y) {
    for (std::ptrdiff_t x = 0; x < w; ++x) {
      for (std::size_t n = 0; n < n_count; ++n) {
        double acc = 0.0;
        for (std::size_t m = 0; m < m_count; ++m) {
          for (std::ptrdiff_t ky = 0; ky < k; ++ky) {
            const std::ptrdiff_t sy = y + ky - r;
            for (std::ptrdiff_t kx = 0; kx < k; ++kx) {
              const std::ptrdiff_t sx = x + kx - r;
              ++macs;
              if (sy < 0 || sy >= h || sx < 0 || sx >= w) continue;
              acc += input(static_cast<std::size_t>(sy), static_cast<std::size_t>(sx), m) *
                     kernel(static_cast<std::size_t>(ky), static_cast<std::size_t>(kx), m, n);
            }
          }
        }
        res.output(static_cast<std::size_t>(y), static_cast<std::size_t>(x), n) = acc;
      }
    }
  }
  res.cost.macs = macs;
  return res;
}

ConvResult conv_depthwise(const Tensor3& input, const DepthwiseKernel& kernel) {
  require(input.channels() == kernel.channels(), "input channels do not match the kernel");
  const auto h = static_cast<std::ptrdiff_t>(input.height());
  const auto w = static_cast<std::ptrdiff_t>(input.width());
  const auto k = static_cast<std::ptrdiff_t>(kernel.kernel());
  const std::ptrdiff_t r = k / 2;

  ConvResult res{Tensor3(input.height(), input.width(), input.channels()), {}};
  std::uint64_t macs = 0;
  for (std::ptrdiff_t y = 0; y < h; ++y) {
    for (std::ptrdiff_t x = 0; x < w; ++x) {
      for (std::size_t m = 0; m < input.channels(); ++m) {
        double acc = 0.0;
        for (std::ptrdiff_t ky = 0; ky < k; ++ky) {
          const std::ptrdiff_t sy = y + ky - r;
          for (std::ptrdiff_t kx = 0; kx < k; ++kx) {
            const std::ptrdiff_t sx = x + kx - r;
            ++macs;
            if (sy < 0 || sy >= h || sx < 0 || sx >= w) continue;
            acc += input(static_cast<std::size_t>(sy), static_cast<std::size_t>(sx), m) *
                   kernel(static_cast<std::size_t>(ky), static_cast<std::size_t>(kx), m);
          }
        }
        res.output(static_cast<std::size_t>(y), static_cast<std::size_t>(x), m) = acc;
      }
    }
  }
  res.cost.macs = macs;
  return res;
}

ConvResult conv_pointwise(const Tensor3& input, const PointwiseKernel& kernel) {
  require(input.channels() == kernel.in_channels(), "input channels do not match the kernel");
  ConvResult res{Tensor3(input.height(), input.width(), kernel.out_channels()), {}};
  std::uint64_t macs = 0;
  for (std::size_t y = 0; y < input.height(); ++y) {
    for (std::size_t x = 0; x < input.width(); ++x) {
      for (std::size_t n = 0; n < kernel.out_channels(); ++n) {
        double acc = 0.0;
        for (std::size_t m = 0; m < kernel.in_channels(); ++m) {
          acc += input(y, x, m) * kernel(m, n);
          ++macs;
        }
        res.output(y, x, n) = acc;
      }
    }
  }
  res.cost.macs = macs;
  return res;
}

ConvResult separable(const Tensor3& input, const DepthwiseKernel& depthwise,
                     const PointwiseKernel& pointwise) {
  require(depthwise.channels() == pointwise.in_channels(),
          "depthwise and pointwise channel counts disagree");
  ConvResult spatial = conv_depthwise(input, depthwise);
  ConvResult mixed = conv_pointwise(spatial.output, pointwise);
  mixed.cost.macs += spatial.cost.macs;
  return mixed;
}

StandardKernel outer_product(const DepthwiseKernel& depthwise, const PointwiseKernel& pointwise) {
  require(depthwise.channels() == pointwise.in_channels(),
          "depthwise and pointwise channel counts disagree");
  StandardKernel k(depthwise.kernel(), depthwise.channels(), pointwise.out_channels());
  for (std::size_t ky = 0; ky < k.kernel(); ++ky)
    for (std::size_t kx = 0; kx < k.kernel(); ++kx)
      for (std::size_t m = 0; m < k.in_channels(); ++m)
        for (std::size_t n = 0; n < k.out_channels(); ++n)
          k(ky, kx, m, n) = depthwise(ky, kx, m) * pointwise(m, n);
  return k;
}

Rational Rational::make(std::uint64_t num, std::uint64_t den) {
  if (den == 0) throw Error(ErrorKind::kParameter, "zero denominator");
  const std::uint64_t g = std::gcd(num, den);
  return g == 0 ? Rational{0, 1} : Rational{num / g, den / g};
}

std::string Rational::str() const { return std::to_string(num) + "/" + std::to_string(den); }

Rational cost_ratio(const ConvSpec& spec) {
  spec.validate();
  const std::uint64_t k2 = spec.kernel * spec.kernel;
  const std::uint64_t n = spec.out_channels;
  // 1/N + 1/k^2 = (k^2 + N) / (N k^2)
  return Rational::make(k2 + n, n * k2);
}

std::uint64_t standard_macs(const ConvSpec& spec, std::size_t height, std::size_t width) {
  spec.validate();
  return static_cast<std::uint64_t>(spec.kernel) * spec.kernel * spec.in_channels *
         spec.out_channels * height * width;
}

std::uint64_t separable_macs(const ConvSpec& spec, std::size_t height, std::size_t width) {
  spec.validate();
  const std::uint64_t hw = static_cast<std::uint64_t>(height) * width;
  return static_cast<std::uint64_t>(spec.kernel) * spec.kernel * spec.in_channels * hw +
         static_cast<std::uint64_t>(spec.in_channels) * spec.out_channels * hw;
}

}  // namespace thermfuse::dsconv
