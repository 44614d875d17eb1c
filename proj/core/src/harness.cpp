#include "thermfuse/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <exception>
#include <limits>
#include <random>
#include <sstream>
#include <thread>

#include "thermfuse/image_ops.hpp"
#include "thermfuse/pgm.hpp"

namespace thermfuse::harness {

namespace {

std::string trim(std::string s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::stringstream ss(line);
  std::string field;
  while (std::getline(ss, field, ',')) fields.push_back(trim(field));
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

}  // namespace

std::vector<ManifestEntry> parse_manifest(const std::string& text,
                                          const std::filesystem::path& base_dir) {
  std::stringstream in(text);
  std::string line;
  std::vector<ManifestEntry> entries;
  bool header = true;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto fields = split_csv_line(trim(line));
    if (header) {
      header = false;
      const std::vector<std::string> expected{"subject_id", "pose_id", "thermal_path",
                                              "visual_path"};
      if (fields != expected) {
        throw Error(ErrorKind::kFormat,
                    "manifest header must be subject_id,pose_id,thermal_path,visual_path");
      }
      continue;
    }
    if (fields.size() != 4 || fields[0].empty()) {
      throw Error(ErrorKind::kFormat, "manifest line " + std::to_string(line_no) +
                                          " does not have four fields");
    }
    auto resolve = [&](const std::string& p) {
      std::filesystem::path path(p);
      return path.is_relative() && !base_dir.empty() ? base_dir / path : path;
    };
    entries.push_back({fields[0], fields[1], resolve(fields[2]), resolve(fields[3])});
  }
  if (header) throw Error(ErrorKind::kFormat, "manifest is empty");
  return entries;
}

std::vector<ManifestEntry> load_manifest(const std::filesystem::path& path) {
  const auto bytes = read_file(path);
  return parse_manifest(std::string(bytes.begin(), bytes.end()), path.parent_path());
}

std::string manifest_csv(const std::vector<ManifestEntry>& entries) {
  std::string out = "subject_id,pose_id,thermal_path,visual_path\n";
  for (const auto& e : entries) {
    out += e.subject_id + "," + e.pose_id + "," + e.thermal_path.string() + "," +
           e.visual_path.string() + "\n";
  }
  return out;
}

std::vector<GrayImage> augment(const GrayImage& img, std::uint8_t fill) {
  std::vector<GrayImage> out;
  out.reserve(kAugmentAngles.size());
  for (int angle : kAugmentAngles) out.push_back(rotate(img, angle, fill));
  return out;
}

namespace {

// Source intervals overlapping each output cell of a length-`src` axis
// resampled to `dst` cells, with overlap lengths as weights.
std::vector<std::vector<std::pair<std::size_t, double>>> box_weights(std::size_t src,
                                                                     std::size_t dst) {
  std::vector<std::vector<std::pair<std::size_t, double>>> cells(dst);
  const double scale = static_cast<double>(src) / static_cast<double>(dst);
  for (std::size_t o = 0; o < dst; ++o) {
    const double lo = static_cast<double>(o) * scale;
    const double hi = static_cast<double>(o + 1) * scale;
    const auto first = static_cast<std::size_t>(std::floor(lo));
    for (std::size_t s = first; s < src && static_cast<double>(s) < hi; ++s) {
      const double overlap =
          std::min(hi, static_cast<double>(s + 1)) - std::max(lo, static_cast<double>(s));
      if (overlap > 0.0) cells[o].emplace_back(s, overlap / scale);
    }
  }
  return cells;
}

}  // namespace

Embedding embed_downsample(const GrayImage& img, std::size_t side) {
  if (side == 0) throw Error(ErrorKind::kParameter, "embedding side must be at least 1");
  const auto rows = box_weights(img.height(), side);
  const auto cols = box_weights(img.width(), side);
  Embedding e{std::vector<double>(side * side, 0.0)};
  for (std::size_t oy = 0; oy < side; ++oy) {
    for (std::size_t ox = 0; ox < side; ++ox) {
      double acc = 0.0;
      for (const auto& [sy, wy] : rows[oy]) {
        for (const auto& [sx, wx] : cols[ox]) acc += wy * wx * img(sy, sx);
      }
      e.values[oy * side + ox] = acc;
    }
  }
  const double n = static_cast<double>(e.values.size());
  double mean = 0.0;
  for (double v : e.values) mean += v;
  mean /= n;
  double var = 0.0;
  for (double v : e.values) var += (v - mean) * (v - mean);
  var /= n;
  if (var < 1e-12) {
    std::fill(e.values.begin(), e.values.end(), 0.0);
    return e;
  }
  const double inv_sd = 1.0 / std::sqrt(var);
  for (double& v : e.values) v = (v - mean) * inv_sd;
  return e;
}

CentroidModel train_centroids(const std::vector<std::pair<std::string, Embedding>>& samples) {
  if (samples.empty()) throw Error(ErrorKind::kParameter, "no training samples");
  CentroidModel model;
  model.dim = samples.front().second.dim();
  std::map<std::string, std::size_t> counts;
  for (const auto& [label, e] : samples) {
    if (e.dim() != model.dim) throw Error(ErrorKind::kShape, "embedding dimension mismatch");
    auto& c = model.centroids[label];
    if (c.empty()) c.assign(model.dim, 0.0);
    for (std::size_t i = 0; i < model.dim; ++i) c[i] += e.values[i];
    ++counts[label];
  }
  for (auto& [label, c] : model.centroids) {
    const double inv = 1.0 / static_cast<double>(counts[label]);
    for (double& v : c) v *= inv;
  }
  return model;
}

std::string classify(const CentroidModel& model, const Embedding& e) {
  if (model.centroids.empty()) throw Error(ErrorKind::kParameter, "model has no labels");
  if (e.dim() != model.dim) throw Error(ErrorKind::kShape, "embedding dimension mismatch");
  const std::string* best = nullptr;
  double best_d = std::numeric_limits<double>::infinity();
  for (const auto& [label, c] : model.centroids) {
    double d = 0.0;
    for (std::size_t i = 0; i < model.dim; ++i) d += (c[i] - e.values[i]) * (c[i] - e.values[i]);
    // Labels are visited in ascending order, so strict < keeps the smallest on ties.
    if (d < best_d) {
      best_d = d;
      best = &label;
    }
  }
  return *best;
}

const char* to_string(Mode mode) {
  switch (mode) {
    case Mode::kThermal: return "thermal";
    case Mode::kVisual: return "visual";
    case Mode::kFused: return "fused";
  }
  return "unknown";
}

Mode parse_mode(const std::string& name) {
  if (name == "thermal") return Mode::kThermal;
  if (name == "visual") return Mode::kVisual;
  if (name == "fused") return Mode::kFused;
  throw Error(ErrorKind::kParameter, "unknown mode '" + name + "'");
}

namespace {

GrayImage prepare(const ManifestEntry& entry, const EvalConfig& config) {
  const GrayImage thermal = load_pgm(entry.thermal_path);
  const GrayImage visual = load_pgm(entry.visual_path);
  if (!thermal.same_shape(visual)) {
    throw Error(ErrorKind::kRegistration, "entry " + entry.subject_id + "/" + entry.pose_id +
                                              ": thermal and visible frames differ in size");
  }
  const FaceBox box = detect_face(thermal, config.detect);
  switch (config.mode) {
    case Mode::kThermal: return crop(thermal, box);
    case Mode::kVisual: return crop(visual, box);
    case Mode::kFused: {
      FusionParams fp = config.fusion;
      fp.lambda = config.lambda;
      return quantize(fuse(crop_pair(thermal, visual, box), fp).fused);
    }
  }
  throw Error(ErrorKind::kParameter, "unknown mode");
}

// Fisher-Yates over the raw engine output; std::shuffle's draw sequence is
// implementation defined, this one is not.
void seeded_shuffle(std::vector<std::size_t>& items, std::mt19937_64& rng) {
  for (std::size_t i = items.size(); i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(rng() % i);
    std::swap(items[i - 1], items[j]);
  }
}

}  // namespace

AccuracyReport evaluate(const std::vector<ManifestEntry>& manifest, const EvalConfig& config,
                        const Embedder* embedder) {
  if (!(config.train_fraction > 0.0 && config.train_fraction < 1.0)) {
    throw Error(ErrorKind::kParameter, "train fraction must lie in (0, 1)");
  }
  config.detect.validate();
  {
    FusionParams fp = config.fusion;
    fp.lambda = config.lambda;
    fp.validate();
  }
  if (manifest.empty()) throw Error(ErrorKind::kProtocol, "manifest has no entries");

  std::map<std::string, std::vector<std::size_t>> by_subject;
  for (std::size_t i = 0; i < manifest.size(); ++i) {
    by_subject[manifest[i].subject_id].push_back(i);
  }
  for (const auto& [subject, idx] : by_subject) {
    if (idx.size() < 2) {
      throw Error(ErrorKind::kProtocol,
                  "subject " + subject + " needs at least two entries for a train/test split");
    }
  }

  const DownsampleEmbedder fallback(config.embed_side);
  const Embedder& emb = embedder ? *embedder : fallback;

  std::vector<GrayImage> images(manifest.size());
  {
    std::vector<std::exception_ptr> failures(manifest.size());
    unsigned workers = config.workers == 0 ? std::max(1u, std::thread::hardware_concurrency())
                                           : config.workers;
    workers = std::min<unsigned>(workers, static_cast<unsigned>(manifest.size()));
    auto run = [&](std::size_t begin, std::size_t stride) {
      for (std::size_t i = begin; i < manifest.size(); i += stride) {
        try {
          images[i] = prepare(manifest[i], config);
        } catch (...) {
          failures[i] = std::current_exception();
        }
      }
    };
    if (workers <= 1) {
      run(0, 1);
    } else {
      std::vector<std::jthread> pool;
      for (unsigned t = 0; t < workers; ++t) pool.emplace_back(run, t, workers);
    }
    for (const auto& e : failures) {
      if (e) std::rethrow_exception(e);
    }
  }

  std::mt19937_64 rng(config.seed);
  std::vector<std::pair<std::string, Embedding>> train;
  std::vector<std::size_t> test;
  for (auto& [subject, idx] : by_subject) {
    seeded_shuffle(idx, rng);
    const auto n = static_cast<double>(idx.size());
    const auto n_train = std::clamp<std::size_t>(
        static_cast<std::size_t>(std::llround(config.train_fraction * n)), 1, idx.size() - 1);
    for (std::size_t k = 0; k < idx.size(); ++k) {
      if (k < n_train) {
        for (const auto& view : augment(images[idx[k]])) train.emplace_back(subject, emb.embed(view));
      } else {
        test.push_back(idx[k]);
      }
    }
  }
  std::sort(test.begin(), test.end());

  const CentroidModel model = train_centroids(train);
  AccuracyReport report;
  report.mode = config.mode;
  report.lambda = config.lambda;
  report.seed = config.seed;
  std::map<std::string, std::pair<std::size_t, std::size_t>> tally;
  for (std::size_t i : test) {
    const bool hit = classify(model, emb.embed(images[i])) == manifest[i].subject_id;
    auto& [correct, total] = tally[manifest[i].subject_id];
    correct += hit ? 1 : 0;
    ++total;
    report.n_correct += hit ? 1 : 0;
  }
  report.n_test = test.size();
  report.accuracy = static_cast<double>(report.n_correct) / static_cast<double>(report.n_test);
  for (const auto& [subject, ct] : tally) {
    report.per_subject[subject] = static_cast<double>(ct.first) / static_cast<double>(ct.second);
  }
  return report;
}

std::string report_csv(const std::vector<AccuracyReport>& reports) {
  if (reports.empty()) throw Error(ErrorKind::kParameter, "no reports to write");
  std::string out = "mode,lambda,accuracy,n_test,seed\n";
  char line[256];
  for (const auto& r : reports) {
    std::snprintf(line, sizeof line, "%s,%.10g,%.10g,%zu,%llu\n", to_string(r.mode), r.lambda,
                  r.accuracy, r.n_test, static_cast<unsigned long long>(r.seed));
    out += line;
  }
  return out;
}

}  // namespace thermfuse::harness
