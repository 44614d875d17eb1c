#pragma once

#include <cstdint>

#include "thermfuse/image.hpp"

namespace thermfuse {

Histogram histogram(const GrayImage& img);

/// Smallest intensity v whose cumulative count reaches ceil(p * pixels).
/// p == 0 yields the darkest intensity present.
std::uint8_t percentile(const GrayImage& img, double p);
std::uint8_t percentile(const Histogram& hist, double p);

/// Linear stretch between the `low` and `high` percentiles. Values outside
/// the band saturate to 0 / 255. When both percentiles coincide the input is
/// returned unchanged.
GrayImage stretch_saturate(const GrayImage& img, double low, double high);

/// k x k median with edge-replicated borders; k must be odd.
GrayImage median_filter(const GrayImage& img, int k);

/// Counter-clockwise rotation about the image center with bilinear sampling.
/// Output keeps the input dimensions; samples falling outside the source
/// become `fill`. Multiples of 90 degrees use exact trigonometry so that
/// quarter turns of square images are pure permutations.
GrayImage rotate(const GrayImage& img, double degrees, std::uint8_t fill = 0);

}  // namespace thermfuse
