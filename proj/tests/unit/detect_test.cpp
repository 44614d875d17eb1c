#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "error_kind.hpp"
#include "synth.hpp"
#include "thermfuse/detect.hpp"
#include "thermfuse/image_ops.hpp"

namespace thermfuse {
namespace {

using testing::kind_of;

// Exhaustive Otsu oracle: maximize w0 * w1 * (mu0 - mu1)^2 over splits
// {< t}, {>= t}; the first maximizer wins.
int otsu_oracle(const Histogram& h) {
  double best = -1.0;
  int level = 1;
  for (int t = 1; t < 256; ++t) {
    double w0 = 0, w1 = 0, s0 = 0, s1 = 0;
    for (int v = 0; v < 256; ++v) {
      const double c = static_cast<double>(h.counts[v]);
      if (v < t) {
        w0 += c;
        s0 += c * v;
      } else {
        w1 += c;
        s1 += c * v;
      }
    }
    if (w0 == 0 || w1 == 0) continue;
    const double d = s0 / w0 - s1 / w1;
    if (w0 * w1 * d * d > best) {
      best = w0 * w1 * d * d;
      level = t;
    }
  }
  return level;
}

Histogram gaussian_mix(std::vector<std::pair<double, double>> modes, double sigma) {
  Histogram h;
  for (int v = 0; v < 256; ++v) {
    double sum = 0;
    for (auto [center, mass] : modes) {
      sum += mass * std::exp(-0.5 * (v - center) * (v - center) / (sigma * sigma));
    }
    h.counts[v] = static_cast<std::uint64_t>(std::llround(sum));
  }
  return h;
}

TEST(SelectThreshold, BimodalValley) {
  const auto h = gaussian_mix({{40.0, 6000.0}, {200.0, 4000.0}}, 15.0);
  // Exhaustive scan for the lowest run between the modes; the valley is its middle.
  std::uint64_t lowest = h.counts[40];
  for (int v = 40; v <= 200; ++v) lowest = std::min(lowest, h.counts[v]);
  int first = 200, last = 40;
  for (int v = 40; v <= 200; ++v) {
    if (h.counts[v] == lowest) {
      first = std::min(first, v);
      last = std::max(last, v);
    }
  }
  const int valley = (first + last) / 2;
  const int t = select_threshold(h, {});
  EXPECT_LE(std::abs(t - valley), 9) << "valley " << valley;
  EXPECT_GT(t, 80);
  EXPECT_LT(t, 170);
}

TEST(SelectThreshold, UnimodalFallsBackToOtsu) {
  const auto h = gaussian_mix({{120.0, 5000.0}}, 20.0);
  EXPECT_EQ(select_threshold(h, {}), otsu_oracle(h));
}

TEST(SelectThreshold, SingleIntensity) {
  Histogram h;
  h.counts[77] = 100;
  EXPECT_EQ(select_threshold(h, {}), 77);
  EXPECT_EQ(otsu_threshold(h), 77);
}

TEST(SelectThreshold, EmptyHistogramIsParameterError) {
  EXPECT_EQ(kind_of([] { select_threshold(Histogram{}, {}); }), ErrorKind::kParameter);
}

TEST(SelectThreshold, PrefersBrightMassiveModeOverMiddleMode) {
  // Dark 50%, middle 25%, bright 25%: the bright mode clears the 20% floor.
  const auto h = gaussian_mix({{30.0, 5000.0}, {120.0, 2500.0}, {210.0, 2500.0}}, 10.0);
  const int t = select_threshold(h, {});
  EXPECT_GT(t, 140);
  EXPECT_LT(t, 190);
}

TEST(OtsuThreshold, MatchesExhaustiveOracle) {
  std::mt19937_64 rng(12);
  for (int trial = 0; trial < 30; ++trial) {
    Histogram h;
    std::uniform_int_distribution<int> bin(0, 255), count(0, 50);
    for (int k = 0; k < 20; ++k) h.counts[bin(rng)] += count(rng) + 1;
    EXPECT_EQ(otsu_threshold(h), otsu_oracle(h));
  }
}

TEST(DetectParams, Validation) {
  DetectParams p;
  EXPECT_NO_THROW(p.validate());
  auto bad = [](auto mutate) {
    DetectParams q;
    mutate(q);
    return kind_of([&] { q.validate(); });
  };
  EXPECT_EQ(bad([](DetectParams& q) { q.saturate_low = 0.5; q.saturate_high = 0.5; }), ErrorKind::kParameter);
  EXPECT_EQ(bad([](DetectParams& q) { q.median_k = 2; }), ErrorKind::kParameter);
  EXPECT_EQ(bad([](DetectParams& q) { q.min_peak_mass = 1.0; }), ErrorKind::kParameter);
  EXPECT_EQ(bad([](DetectParams& q) { q.smoothing_window = 4; }), ErrorKind::kParameter);
  EXPECT_EQ(bad([](DetectParams& q) { q.connectivity = 6; }), ErrorKind::kParameter);
  EXPECT_EQ(bad([](DetectParams& q) { q.valley_merge_ratio = 0.0; }), ErrorKind::kParameter);
}

TEST(Binarize, Examples) {
  GrayImage img(2, 1);
  img[0] = 100;
  img[1] = 200;
  EXPECT_EQ(binarize(img, 0).count(), 2u);
  EXPECT_EQ(binarize(img, 255).count(), 0u);
  const auto m = binarize(img, 150);
  EXPECT_FALSE(m.at(0, 0));
  EXPECT_TRUE(m.at(0, 1));
}

BinaryMask mask_from(std::size_t w, std::size_t h, const std::vector<std::pair<int, int>>& on) {
  BinaryMask m(w, h);
  for (auto [r, c] : on) m.set(r, c, true);
  return m;
}

TEST(LargestComponent, KeepsBiggerBlob) {
  BinaryMask m(12, 8);
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 4; ++c) m.set(r, c, true);  // area 12
  for (int c = 7; c < 12; ++c) m.set(6, c, true);    // area 5
  const auto out = largest_component(m, 8);
  EXPECT_EQ(out.count(), 12u);
  EXPECT_TRUE(out.at(0, 0));
  EXPECT_FALSE(out.at(6, 8));
}

TEST(LargestComponent, SingleBlobUnchangedAndEmptyFails) {
  const auto m = mask_from(5, 5, {{1, 1}, {1, 2}, {2, 2}});
  EXPECT_EQ(largest_component(m, 4).bits, m.bits);
  EXPECT_EQ(kind_of([] { largest_component(BinaryMask(4, 4), 8); }), ErrorKind::kEmptyForeground);
}

TEST(LargestComponent, ConnectivityAndTieBreak) {
  // Diagonal pair: one blob under 8-connectivity, two under 4.
  const auto diag = mask_from(4, 4, {{0, 0}, {1, 1}});
  EXPECT_EQ(largest_component(diag, 8).count(), 2u);
  const auto four = largest_component(diag, 4);
  EXPECT_EQ(four.count(), 1u);
  EXPECT_TRUE(four.at(0, 0));  // row-major first wins the tie
}

// Independent BFS labeling oracle.
std::vector<std::size_t> component_areas(const BinaryMask& m, int conn) {
  const int w = static_cast<int>(m.width()), h = static_cast<int>(m.height());
  std::vector<int> seen(w * h, 0);
  std::vector<std::size_t> areas;
  for (int s = 0; s < w * h; ++s) {
    if (!m.bits[s] || seen[s]) continue;
    std::vector<int> queue{s};
    seen[s] = 1;
    for (std::size_t qi = 0; qi < queue.size(); ++qi) {
      const int y = queue[qi] / w, x = queue[qi] % w;
      for (int dy = -1; dy <= 1; ++dy)
        for (int dx = -1; dx <= 1; ++dx) {
          if ((dx == 0 && dy == 0) || (conn == 4 && dx && dy)) continue;
          const int ny = y + dy, nx = x + dx;
          if (ny < 0 || nx < 0 || ny >= h || nx >= w) continue;
          const int q = ny * w + nx;
          if (m.bits[q] && !seen[q]) {
            seen[q] = 1;
            queue.push_back(q);
          }
        }
    }
    areas.push_back(queue.size());
  }
  return areas;
}

TEST(LargestComponent, RandomMasksAgainstOracle) {
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 60; ++trial) {
    const std::size_t w = 1 + rng() % 32, h = 1 + rng() % 32;
    BinaryMask m(w, h);
    for (auto& b : m.bits.pixels()) b = (rng() % 100) < 45 ? 1 : 0;
    if (m.count() == 0) m.set(0, 0, true);
    for (int conn : {4, 8}) {
      const auto out = largest_component(m, conn);
      const auto areas = component_areas(m, conn);
      EXPECT_EQ(out.count(), *std::max_element(areas.begin(), areas.end()));
      for (std::size_t i = 0; i < m.bits.size(); ++i) {
        if (out.bits[i]) ASSERT_TRUE(m.bits[i]);
      }
      EXPECT_EQ(component_areas(out, conn).size(), 1u);
    }
  }
}

TEST(BoundingBox, Examples) {
  EXPECT_EQ(bounding_box(mask_from(8, 8, {{4, 3}})), (FaceBox{3, 4, 1, 1}));
  EXPECT_EQ(bounding_box(mask_from(10, 10, {{1, 1}, {5, 7}})), (FaceBox{1, 1, 7, 5}));
  BinaryMask full(6, 3);
  for (auto& b : full.bits.pixels()) b = 1;
  EXPECT_EQ(bounding_box(full), (FaceBox{0, 0, 6, 3}));
  EXPECT_EQ(kind_of([] { bounding_box(BinaryMask(3, 3)); }), ErrorKind::kEmptyForeground);
}

TEST(BoundingBox, MinimalOnRandomMasks) {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 40; ++trial) {
    BinaryMask m(20, 15);
    for (int k = 0; k < 6; ++k) m.set(rng() % 15, rng() % 20, true);
    const auto b = bounding_box(m);
    auto any_in_row = [&](std::size_t r) {
      for (std::size_t c = b.x0; c < b.x0 + b.width; ++c)
        if (m.at(r, c)) return true;
      return false;
    };
    auto any_in_col = [&](std::size_t c) {
      for (std::size_t r = b.y0; r < b.y0 + b.height; ++r)
        if (m.at(r, c)) return true;
      return false;
    };
    EXPECT_TRUE(any_in_row(b.y0));
    EXPECT_TRUE(any_in_row(b.y0 + b.height - 1));
    EXPECT_TRUE(any_in_col(b.x0));
    EXPECT_TRUE(any_in_col(b.x0 + b.width - 1));
    for (std::size_t i = 0; i < m.bits.size(); ++i) {
      if (!m.bits[i]) continue;
      const auto r = i / 20, c = i % 20;
      EXPECT_TRUE(r >= b.y0 && r < b.y0 + b.height && c >= b.x0 && c < b.x0 + b.width);
    }
  }
}

TEST(Iou, Basics) {
  EXPECT_DOUBLE_EQ(iou({0, 0, 4, 4}, {0, 0, 4, 4}), 1.0);
  EXPECT_DOUBLE_EQ(iou({0, 0, 4, 4}, {2, 0, 4, 4}), 8.0 / 24.0);
  EXPECT_DOUBLE_EQ(iou({0, 0, 2, 2}, {5, 5, 2, 2}), 0.0);
}

TEST(DetectFace, PhantomIou) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    testing::PhantomSpec spec;
    spec.distractor_fraction = 0.0;
    const auto p = testing::make_phantom(500 + seed, spec);
    EXPECT_GE(iou(detect_face(p.thermal), p.face), 0.90) << seed;
  }
}

TEST(DetectFace, DistractorIgnored) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto p = testing::make_phantom(900 + seed);
    ASSERT_GT(p.distractor_area, 0u);
    ASSERT_LE(p.distractor_area * 4, p.face_area);
    EXPECT_GE(iou(detect_face(p.thermal), p.face), 0.90) << seed;
  }
}

TEST(DetectFace, ShiftInvariantAndDeterministic) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto p = testing::make_phantom(40 + seed);
    GrayImage shifted = p.thermal;
    for (auto& v : shifted.pixels()) {
      ASSERT_LE(v, 245);
      v = static_cast<std::uint8_t>(v + 10);
    }
    const auto box = detect_face(p.thermal);
    EXPECT_EQ(detect_face(shifted), box);
    EXPECT_EQ(detect_face(p.thermal), box);
  }
}

TEST(DetectFace, UniformImageIsDocumentedNotACrash) {
  const GrayImage flat(32, 24, std::vector<std::uint8_t>(32 * 24, 90));
  // Otsu on a single-valued histogram returns that value, so every pixel is
  // foreground and the box is the whole frame.
  EXPECT_EQ(detect_face(flat), (FaceBox{0, 0, 32, 24}));
}

TEST(Crop, PairExamples) {
  std::mt19937_64 rng(1);
  const auto img = testing::random_gray(10, 10, rng);
  const auto pair = crop_pair(img, img, {2, 2, 4, 4});
  EXPECT_EQ(pair.width(), 4u);
  EXPECT_EQ(pair.ir, pair.vi);
  EXPECT_EQ(pair.ir(0, 0), img(2, 2));
  const auto whole = crop_pair(img, img, {0, 0, 10, 10});
  EXPECT_EQ(quantize(whole.ir), img);
  const auto small = testing::random_gray(8, 8, rng);
  EXPECT_EQ(kind_of([&] { crop_pair(img, small, {0, 0, 4, 4}); }), ErrorKind::kRegistration);
  EXPECT_EQ(kind_of([&] { crop_pair(img, img, {8, 8, 4, 4}); }), ErrorKind::kBounds);
  EXPECT_EQ(kind_of([&] { crop(img, {0, 0, 0, 3}); }), ErrorKind::kBounds);
}

}  // namespace
}  // namespace thermfuse
