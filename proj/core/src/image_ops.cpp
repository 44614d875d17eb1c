#include "thermfuse/image_ops.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <vector>

namespace thermfuse {

Histogram histogram(const GrayImage& img) {
  Histogram h;
  for (auto v : img.pixels()) ++h.counts[v];
  return h;
}

std::uint8_t percentile(const Histogram& hist, double p) {
  if (!(p >= 0.0 && p <= 1.0)) {
    throw Error(ErrorKind::kParameter, "percentile fraction must lie in [0, 1]");
  }
  const std::uint64_t total = hist.total();
  if (total == 0) {
    throw Error(ErrorKind::kParameter, "percentile of an empty histogram");
  }
  // The small bias keeps products such as 0.99 * 100 from landing one ulp
  // above an integer and bumping the rank.
  auto rank = static_cast<std::uint64_t>(std::ceil(p * static_cast<double>(total) - 1e-9));
  rank = std::clamp<std::uint64_t>(rank, 1, total);
  std::uint64_t cumulative = 0;
  for (int v = 0; v < 256; ++v) {
    cumulative += hist.counts[v];
    if (cumulative >= rank) return static_cast<std::uint8_t>(v);
  }
  return 255;
}

std::uint8_t percentile(const GrayImage& img, double p) {
  return percentile(histogram(img), p);
}

GrayImage stretch_saturate(const GrayImage& img, double low, double high) {
  if (!(low >= 0.0 && low < high && high <= 1.0)) {
    throw Error(ErrorKind::kParameter, "stretch requires 0 <= low < high <= 1");
  }
  const Histogram h = histogram(img);
  const int a = percentile(h, low);
  const int b = percentile(h, high);
  if (a == b) return img;

  // round(255 (v - a) / (b - a)) in exact integer arithmetic; the quotient is
  // non-negative so adding half the divisor rounds halves upward.
  std::array<std::uint8_t, 256> lut{};
  const int span = b - a;
  for (int v = 0; v < 256; ++v) {
    const int c = std::clamp(v, a, b) - a;
    lut[v] = static_cast<std::uint8_t>((2 * 255 * c + span) / (2 * span));
  }
  GrayImage out(img.width(), img.height());
  std::transform(img.pixels().begin(), img.pixels().end(), out.pixels().begin(),
                 [&](std::uint8_t v) { return lut[v]; });
  return out;
}

GrayImage median_filter(const GrayImage& img, int k) {
  if (k < 1 || k % 2 == 0) {
    throw Error(ErrorKind::kParameter, "median window must be odd and >= 1");
  }
  if (k == 1) return img;
  const auto w = static_cast<std::ptrdiff_t>(img.width());
  const auto h = static_cast<std::ptrdiff_t>(img.height());
  const std::ptrdiff_t r = k / 2;
  const std::size_t mid = static_cast<std::size_t>(k) * k / 2;

  GrayImage out(img.width(), img.height());
  std::vector<std::uint8_t> window(static_cast<std::size_t>(k) * k);
  for (std::ptrdiff_t y = 0; y < h; ++y) {
    for (std::ptrdiff_t x = 0; x < w; ++x) {
      std::size_t n = 0;
      for (std::ptrdiff_t dy = -r; dy <= r; ++dy) {
        const auto sy = static_cast<std::size_t>(std::clamp(y + dy, std::ptrdiff_t{0}, h - 1));
        for (std::ptrdiff_t dx = -r; dx <= r; ++dx) {
          const auto sx = static_cast<std::size_t>(std::clamp(x + dx, std::ptrdiff_t{0}, w - 1));
          window[n++] = img(sy, sx);
        }
      }
      std::nth_element(window.begin(), window.begin() + static_cast<std::ptrdiff_t>(mid),
                       window.end());
      out(static_cast<std::size_t>(y), static_cast<std::size_t>(x)) = window[mid];
    }
  }
  return out;
}

namespace {

// Exact cosine/sine for quarter turns, libm otherwise.
std::pair<double, double> cos_sin_degrees(double degrees) {
  const double reduced = std::fmod(degrees, 360.0);
  const double turns = reduced / 90.0;
  if (turns == std::floor(turns)) {
    switch ((static_cast<int>(turns) % 4 + 4) % 4) {
      case 0: return {1.0, 0.0};
      case 1: return {0.0, 1.0};
      case 2: return {-1.0, 0.0};
      default: return {0.0, -1.0};
    }
  }
  const double rad = reduced * std::numbers::pi / 180.0;
  return {std::cos(rad), std::sin(rad)};
}

}  // namespace

GrayImage rotate(const GrayImage& img, double degrees, std::uint8_t fill) {
  if (!std::isfinite(degrees)) {
    throw Error(ErrorKind::kParameter, "rotation angle must be finite");
  }
  const auto [c, s] = cos_sin_degrees(degrees);
  if (c == 1.0 && s == 0.0) return img;

  const double w = static_cast<double>(img.width());
  const double h = static_cast<double>(img.height());
  const double cx = (w - 1.0) / 2.0;
  const double cy = (h - 1.0) / 2.0;
  constexpr double kEdge = 1e-9;

  GrayImage out(img.width(), img.height(), fill);
  for (std::size_t row = 0; row < img.height(); ++row) {
    for (std::size_t col = 0; col < img.width(); ++col) {
      const double dx = static_cast<double>(col) - cx;
      const double dy = static_cast<double>(row) - cy;
      // Inverse map: sample the source at the output pixel rotated back.
      double sx = cx + c * dx - s * dy;
      double sy = cy + s * dx + c * dy;
      if (sx < -kEdge || sy < -kEdge || sx > w - 1.0 + kEdge || sy > h - 1.0 + kEdge) continue;
      sx = std::clamp(sx, 0.0, w - 1.0);
      sy = std::clamp(sy, 0.0, h - 1.0);
      const auto x0 = static_cast<std::size_t>(std::floor(sx));
      const auto y0 = static_cast<std::size_t>(std::floor(sy));
      const std::size_t x1 = std::min(x0 + 1, img.width() - 1);
      const std::size_t y1 = std::min(y0 + 1, img.height() - 1);
      const double fx = sx - static_cast<double>(x0);
      const double fy = sy - static_cast<double>(y0);
      const double top = (1.0 - fx) * img(y0, x0) + fx * img(y0, x1);
      const double bottom = (1.0 - fx) * img(y1, x0) + fx * img(y1, x1);
      out(row, col) = saturate_round((1.0 - fy) * top + fy * bottom);
    }
  }
  return out;
}

}  // namespace thermfuse
