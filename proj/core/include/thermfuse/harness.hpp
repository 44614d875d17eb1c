#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "thermfuse/detect.hpp"
#include "thermfuse/fusion.hpp"
#include "thermfuse/image.hpp"

namespace thermfuse::harness {

struct ManifestEntry {
  std::string subject_id;
  std::string pose_id;
  std::filesystem::path thermal_path;
  std::filesystem::path visual_path;
};

/// Parses `subject_id,pose_id,thermal_path,visual_path` rows. Relative paths
/// are resolved against `base_dir`.
std::vector<ManifestEntry> parse_manifest(const std::string& text,
                                          const std::filesystem::path& base_dir = {});
std::vector<ManifestEntry> load_manifest(const std::filesystem::path& path);
std::string manifest_csv(const std::vector<ManifestEntry>& entries);

/// -90, -80, ..., +90 degrees.
inline constexpr std::array<int, 19> kAugmentAngles = {
    -90, -80, -70, -60, -50, -40, -30, -20, -10, 0, 10, 20, 30, 40, 50, 60, 70, 80, 90};

/// Rotated copies at every angle in kAugmentAngles, ascending; the 0 degree
/// element is the input itself.
std::vector<GrayImage> augment(const GrayImage& img, std::uint8_t fill = 0);

struct Embedding {
  std::vector<double> values;
  std::size_t dim() const noexcept { return values.size(); }
};

class Embedder {
 public:
  virtual ~Embedder() = default;
  virtual Embedding embed(const GrayImage& img) const = 0;
};

/// Area-weighted box downsample to side x side, flattened row-major and
/// standardized to zero mean / unit variance. Flat images map to zeros.
Embedding embed_downsample(const GrayImage& img, std::size_t side);

class DownsampleEmbedder final : public Embedder {
 public:
  explicit DownsampleEmbedder(std::size_t side = 16) : side_(side) {}
  Embedding embed(const GrayImage& img) const override { return embed_downsample(img, side_); }

 private:
  std::size_t side_;
};

struct CentroidModel {
  std::map<std::string, std::vector<double>> centroids;
  std::size_t dim = 0;
};

CentroidModel train_centroids(const std::vector<std::pair<std::string, Embedding>>& samples);

/// Nearest centroid in Euclidean distance; ties go to the smallest label.
std::string classify(const CentroidModel& model, const Embedding& e);

enum class Mode { kThermal, kVisual, kFused };

const char* to_string(Mode mode);
Mode parse_mode(const std::string& name);

struct EvalConfig {
  Mode mode = Mode::kFused;
  double lambda = 7.0;
  double train_fraction = 0.7;
  std::uint64_t seed = 1;
  std::size_t embed_side = 16;
  DetectParams detect;
  FusionParams fusion;  ///< `lambda` is taken from this struct's `lambda`.
  unsigned workers = 1;
};

struct AccuracyReport {
  Mode mode = Mode::kFused;
  double lambda = 0.0;
  double accuracy = 0.0;
  std::size_t n_test = 0;
  std::size_t n_correct = 0;
  std::uint64_t seed = 0;
  std::map<std::string, double> per_subject;

  friend bool operator==(const AccuracyReport&, const AccuracyReport&) = default;
};

/// Face-crop every entry, pick the modality image (fusing when asked), split
/// each subject's entries into train / test with a seeded shuffle, augment
/// the training side, and score a nearest-centroid classifier on the test
/// side. `embedder` defaults to DownsampleEmbedder(config.embed_side).
AccuracyReport evaluate(const std::vector<ManifestEntry>& manifest, const EvalConfig& config,
                        const Embedder* embedder = nullptr);

/// CSV with header mode,lambda,accuracy,n_test,seed.
std::string report_csv(const std::vector<AccuracyReport>& reports);

}  // namespace thermfuse::harness
