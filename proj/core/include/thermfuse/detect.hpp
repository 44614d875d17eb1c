#pragma once

#include <cstddef>
#include <cstdint>

#include "thermfuse/image.hpp"
#include "thermfuse/registered_pair.hpp"

namespace thermfuse {

/// Axis-aligned crop rectangle in pixel coordinates.
struct FaceBox {
  std::size_t x0 = 0;
  std::size_t y0 = 0;
  std::size_t width = 0;
  std::size_t height = 0;

  bool fits(std::size_t image_width, std::size_t image_height) const noexcept {
    return width >= 1 && height >= 1 && x0 + width <= image_width &&
           y0 + height <= image_height;
  }

  friend bool operator==(const FaceBox&, const FaceBox&) = default;
};

double iou(const FaceBox& a, const FaceBox& b);

struct DetectParams {
  double saturate_low = 0.01;
  double saturate_high = 0.99;
  int median_k = 3;
  /// Minimum share of all pixels a histogram mode needs to count as the face.
  double min_peak_mass = 0.20;
  int smoothing_window = 9;
  int connectivity = 8;
  /// Neighbouring modes merge while the valley between them is at least this
  /// share of the lower peak.
  double valley_merge_ratio = 0.5;

  /// Throws a parameter error when any field violates its range.
  void validate() const;
};

/// Picks the binarization level from a histogram: the valley below the
/// brightest sufficiently massive mode, after shallow valleys have been merged
/// away. Falls back to Otsu when the smoothed
/// histogram has fewer than two modes, when no mode reaches the mass floor, or
/// when the chosen mode is the darkest one.
std::uint8_t select_threshold(const Histogram& hist, const DetectParams& params);

/// Otsu's level on the raw histogram, expressed as the lowest intensity of the
/// bright class (pixels >= level). A single-valued histogram returns that value.
std::uint8_t otsu_threshold(const Histogram& hist);

BinaryMask binarize(const GrayImage& img, int threshold);

/// Keeps the connected component with the largest area. Equal areas resolve
/// to the component reached first in row-major order.
BinaryMask largest_component(const BinaryMask& mask, int connectivity);

FaceBox bounding_box(const BinaryMask& mask);

/// Full thermal detection: stretch, median, stretch, threshold, biggest blob,
/// tightest rectangle.
FaceBox detect_face(const GrayImage& thermal, const DetectParams& params = {});

GrayImage crop(const GrayImage& img, const FaceBox& box);

/// Crops the same rectangle out of both modalities. Throws a registration
/// error when the frames differ in size and a bounds error when the box does
/// not fit.
RegisteredPair crop_pair(const GrayImage& thermal, const GrayImage& visual, const FaceBox& box);

}  // namespace thermfuse
