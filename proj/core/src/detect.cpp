#include "thermfuse/detect.hpp"

#include <algorithm>
#include <limits>
#include <vector>

#include "thermfuse/image_ops.hpp"

namespace thermfuse {

double iou(const FaceBox& a, const FaceBox& b) {
  const auto ix0 = std::max(a.x0, b.x0);
  const auto iy0 = std::max(a.y0, b.y0);
  const auto ix1 = std::min(a.x0 + a.width, b.x0 + b.width);
  const auto iy1 = std::min(a.y0 + a.height, b.y0 + b.height);
  const double inter =
      (ix1 > ix0 && iy1 > iy0) ? static_cast<double>((ix1 - ix0) * (iy1 - iy0)) : 0.0;
  const double uni = static_cast<double>(a.width * a.height + b.width * b.height) - inter;
  return uni > 0.0 ? inter / uni : 0.0;
}

void DetectParams::validate() const {
  if (!(saturate_low >= 0.0 && saturate_low < saturate_high && saturate_high <= 1.0)) {
    throw Error(ErrorKind::kParameter, "saturation fractions must satisfy 0 <= low < high <= 1");
  }
  if (median_k < 1 || median_k % 2 == 0) {
    throw Error(ErrorKind::kParameter, "median window must be odd and >= 1");
  }
  if (!(min_peak_mass > 0.0 && min_peak_mass < 1.0)) {
    throw Error(ErrorKind::kParameter, "min peak mass must lie in (0, 1)");
  }
  if (smoothing_window < 1 || smoothing_window % 2 == 0) {
    throw Error(ErrorKind::kParameter, "smoothing window must be odd and >= 1");
  }
  if (connectivity != 4 && connectivity != 8) {
    throw Error(ErrorKind::kParameter, "connectivity must be 4 or 8");
  }
  if (!(valley_merge_ratio > 0.0 && valley_merge_ratio <= 1.0)) {
    throw Error(ErrorKind::kParameter, "valley merge ratio must lie in (0, 1]");
  }
}

namespace {

constexpr int kBins = 256;
// More modes than this are treated as noise and smoothed away.
constexpr int kMaxModes = 4;
constexpr int kMaxSmoothingPasses = 64;

std::vector<double> moving_average(const std::vector<double>& in, int window) {
  const int r = window / 2;
  std::vector<double> out(in.size());
  for (int i = 0; i < kBins; ++i) {
    const int lo = std::max(0, i - r);
    const int hi = std::min(kBins - 1, i + r);
    double sum = 0.0;
    for (int j = lo; j <= hi; ++j) sum += in[j];
    out[i] = sum / (hi - lo + 1);
  }
  return out;
}

// Plateau-aware local maxima; a flat top reports its middle bin.
std::vector<int> find_peaks(const std::vector<double>& s) {
  std::vector<int> peaks;
  int i = 0;
  while (i < kBins) {
    int j = i;
    while (j + 1 < kBins && s[j + 1] == s[i]) ++j;
    const bool rises = i == 0 || s[i - 1] < s[i];
    const bool falls = j == kBins - 1 || s[j + 1] < s[j];
    if (rises && falls && s[i] > 0.0) peaks.push_back((i + j) / 2);
    i = j + 1;
  }
  return peaks;
}

// Lowest bin strictly between two peaks; the middle of a flat bottom.
int deepest_valley(const std::vector<double>& s, int left_peak, int right_peak) {
  double lowest = std::numeric_limits<double>::infinity();
  int first = left_peak + 1;
  int last = first;
  for (int i = left_peak + 1; i < right_peak; ++i) {
    if (s[i] < lowest) {
      lowest = s[i];
      first = last = i;
    } else if (s[i] == lowest) {
      last = i;
    }
  }
  return (first + last) / 2;
}

// Repeatedly drops the lower peak of the adjacent pair with the shallowest
// valley, as long as that valley reaches `ratio` of the lower peak.
void merge_shallow_modes(const std::vector<double>& s, std::vector<int>& peaks, double ratio) {
  while (peaks.size() > 1) {
    double best_score = -1.0;
    std::size_t best = 0;
    for (std::size_t i = 0; i + 1 < peaks.size(); ++i) {
      const double low_peak = std::min(s[peaks[i]], s[peaks[i + 1]]);
      const double score = s[deepest_valley(s, peaks[i], peaks[i + 1])] / low_peak;
      if (score > best_score) {
        best_score = score;
        best = i;
      }
    }
    if (best_score < ratio) return;
    const std::size_t drop = s[peaks[best]] < s[peaks[best + 1]] ? best : best + 1;
    peaks.erase(peaks.begin() + static_cast<std::ptrdiff_t>(drop));
  }
}

}  // namespace

std::uint8_t otsu_threshold(const Histogram& hist) {
  const std::uint64_t total = hist.total();
  if (total == 0) {
    throw Error(ErrorKind::kParameter, "threshold of an empty histogram");
  }
  int nonempty = 0;
  int only = 0;
  double sum_all = 0.0;
  for (int v = 0; v < kBins; ++v) {
    if (hist.counts[v] > 0) {
      ++nonempty;
      only = v;
    }
    sum_all += static_cast<double>(v) * static_cast<double>(hist.counts[v]);
  }
  if (nonempty == 1) return static_cast<std::uint8_t>(only);

  double best = -1.0;
  int best_level = 1;
  double w0 = 0.0;
  double sum0 = 0.0;
  const double n = static_cast<double>(total);
  for (int level = 1; level < kBins; ++level) {
    w0 += static_cast<double>(hist.counts[level - 1]);
    sum0 += static_cast<double>(level - 1) * static_cast<double>(hist.counts[level - 1]);
    const double w1 = n - w0;
    if (w0 == 0.0 || w1 == 0.0) continue;
    const double mu0 = sum0 / w0;
    const double mu1 = (sum_all - sum0) / w1;
    const double between = w0 * w1 * (mu0 - mu1) * (mu0 - mu1);
    if (between > best) {
      best = between;
      best_level = level;
    }
  }
  return static_cast<std::uint8_t>(best_level);
}

std::uint8_t select_threshold(const Histogram& hist, const DetectParams& params) {
  params.validate();
  const std::uint64_t total = hist.total();
  if (total == 0) {
    throw Error(ErrorKind::kParameter, "threshold of an empty histogram");
  }

  std::vector<double> smooth(hist.counts.begin(), hist.counts.end());
  smooth = moving_average(smooth, params.smoothing_window);
  auto peaks = find_peaks(smooth);
  for (int pass = 1; pass < kMaxSmoothingPasses && static_cast<int>(peaks.size()) > kMaxModes;
       ++pass) {
    smooth = moving_average(smooth, params.smoothing_window);
    peaks = find_peaks(smooth);
  }
  merge_shallow_modes(smooth, peaks, params.valley_merge_ratio);
  if (peaks.size() < 2) return otsu_threshold(hist);

  std::vector<int> valleys;
  for (std::size_t i = 0; i + 1 < peaks.size(); ++i) {
    valleys.push_back(deepest_valley(smooth, peaks[i], peaks[i + 1]));
  }

  // Mode i owns bins [valleys[i-1], valleys[i]); the valley bin goes to the
  // brighter side, matching binarize's >= rule.
  std::vector<double> mass(peaks.size(), 0.0);
  for (std::size_t i = 0; i < peaks.size(); ++i) {
    const int lo = i == 0 ? 0 : valleys[i - 1];
    const int hi = i + 1 == peaks.size() ? kBins : valleys[i];
    for (int v = lo; v < hi; ++v) mass[i] += static_cast<double>(hist.counts[v]);
  }

  const double floor = params.min_peak_mass * static_cast<double>(total);
  std::size_t chosen = peaks.size();
  for (std::size_t i = peaks.size(); i-- > 0;) {
    if (mass[i] >= floor) {
      chosen = i;
      break;
    }
  }
  // No qualifying bright mode, or only the darkest one: the peak structure
  // says nothing about face versus background.
  if (chosen == peaks.size() || chosen == 0) return otsu_threshold(hist);
  return static_cast<std::uint8_t>(valleys[chosen - 1]);
}

BinaryMask binarize(const GrayImage& img, int threshold) {
  BinaryMask mask(img.width(), img.height());
  for (std::size_t i = 0; i < img.size(); ++i) {
    mask.bits[i] = img[i] >= threshold ? 1 : 0;
  }
  return mask;
}

BinaryMask largest_component(const BinaryMask& mask, int connectivity) {
  if (connectivity != 4 && connectivity != 8) {
    throw Error(ErrorKind::kParameter, "connectivity must be 4 or 8");
  }
  const std::size_t w = mask.width();
  const std::size_t h = mask.height();
  constexpr std::uint32_t kUnlabeled = 0;
  std::vector<std::uint32_t> label(w * h, kUnlabeled);
  std::vector<std::size_t> stack;
  std::uint32_t next = 0;
  std::uint32_t best_label = kUnlabeled;
  std::size_t best_area = 0;

  for (std::size_t start = 0; start < w * h; ++start) {
    if (mask.bits[start] == 0 || label[start] != kUnlabeled) continue;
    const std::uint32_t id = ++next;
    std::size_t area = 0;
    label[start] = id;
    stack.assign(1, start);
    while (!stack.empty()) {
      const std::size_t p = stack.back();
      stack.pop_back();
      ++area;
      const auto py = static_cast<std::ptrdiff_t>(p / w);
      const auto px = static_cast<std::ptrdiff_t>(p % w);
      for (std::ptrdiff_t dy = -1; dy <= 1; ++dy) {
        for (std::ptrdiff_t dx = -1; dx <= 1; ++dx) {
          if (dx == 0 && dy == 0) continue;
          if (connectivity == 4 && dx != 0 && dy != 0) continue;
          const auto ny = py + dy;
          const auto nx = px + dx;
          if (ny < 0 || nx < 0 || ny >= static_cast<std::ptrdiff_t>(h) ||
              nx >= static_cast<std::ptrdiff_t>(w)) {
            continue;
          }
          const auto q = static_cast<std::size_t>(ny) * w + static_cast<std::size_t>(nx);
          if (mask.bits[q] != 0 && label[q] == kUnlabeled) {
            label[q] = id;
            stack.push_back(q);
          }
        }
      }
    }
    // Strict comparison keeps the earliest component on ties.
    if (area > best_area) {
      best_area = area;
      best_label = id;
    }
  }
  if (best_label == kUnlabeled) {
    throw Error(ErrorKind::kEmptyForeground, "mask has no foreground pixels");
  }
  BinaryMask out(w, h);
  for (std::size_t i = 0; i < w * h; ++i) out.bits[i] = label[i] == best_label ? 1 : 0;
  return out;
}

FaceBox bounding_box(const BinaryMask& mask) {
  std::size_t x_min = mask.width(), y_min = mask.height(), x_max = 0, y_max = 0;
  bool any = false;
  for (std::size_t y = 0; y < mask.height(); ++y) {
    for (std::size_t x = 0; x < mask.width(); ++x) {
      if (!mask.at(y, x)) continue;
      any = true;
      x_min = std::min(x_min, x);
      x_max = std::max(x_max, x);
      y_min = std::min(y_min, y);
      y_max = std::max(y_max, y);
    }
  }
  if (!any) {
    throw Error(ErrorKind::kEmptyForeground, "mask has no foreground pixels");
  }
  return {x_min, y_min, x_max - x_min + 1, y_max - y_min + 1};
}

FaceBox detect_face(const GrayImage& thermal, const DetectParams& params) {
  params.validate();
  const GrayImage stretched = stretch_saturate(thermal, params.saturate_low, params.saturate_high);
  const GrayImage smoothed = median_filter(stretched, params.median_k);
  const GrayImage enhanced = stretch_saturate(smoothed, params.saturate_low, params.saturate_high);
  const auto level = select_threshold(histogram(enhanced), params);
  const BinaryMask blob = largest_component(binarize(enhanced, level), params.connectivity);
  return bounding_box(blob);
}

GrayImage crop(const GrayImage& img, const FaceBox& box) {
  if (!box.fits(img.width(), img.height())) {
    throw Error(ErrorKind::kBounds, "crop rectangle exceeds image bounds");
  }
  GrayImage out(box.width, box.height);
  for (std::size_t y = 0; y < box.height; ++y) {
    for (std::size_t x = 0; x < box.width; ++x) out(y, x) = img(box.y0 + y, box.x0 + x);
  }
  return out;
}

RegisteredPair crop_pair(const GrayImage& thermal, const GrayImage& visual, const FaceBox& box) {
  if (!thermal.same_shape(visual)) {
    throw Error(ErrorKind::kRegistration, "thermal and visible frames differ in size");
  }
  return {to_real(crop(thermal, box)), to_real(crop(visual, box))};
}

}  // namespace thermfuse
