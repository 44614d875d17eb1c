#include "thermfuse/pgm.hpp"

#include <atomic>
#include <cctype>
#include <fstream>
#include <iterator>
#include <string>

namespace thermfuse {

namespace {

class HeaderReader {
 public:
  explicit HeaderReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  void skip_space_and_comments() {
    while (pos_ < bytes_.size()) {
      const auto c = bytes_[pos_];
      if (c == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n' && bytes_[pos_] != '\r') ++pos_;
      } else if (std::isspace(c)) {
        ++pos_;
      } else {
        return;
      }
    }
  }

  std::uint64_t read_uint(const char* field) {
    skip_space_and_comments();
    if (pos_ >= bytes_.size() || !std::isdigit(bytes_[pos_])) {
      throw Error(ErrorKind::kFormat, std::string("expected integer for ") + field);
    }
    std::uint64_t value = 0;
    while (pos_ < bytes_.size() && std::isdigit(bytes_[pos_])) {
      value = value * 10 + (bytes_[pos_] - '0');
      if (value > (1ULL << 32)) {
        throw Error(ErrorKind::kFormat, std::string(field) + " out of range");
      }
      ++pos_;
    }
    return value;
  }

  // Exactly one whitespace byte separates maxval from the raster.
  void consume_single_space() {
    if (pos_ >= bytes_.size()) {
      throw Error(ErrorKind::kTruncation, "missing pixel data");
    }
    if (!std::isspace(bytes_[pos_])) {
      throw Error(ErrorKind::kFormat, "expected whitespace after maxval");
    }
    ++pos_;
  }

  std::size_t pos() const { return pos_; }
  void advance(std::size_t n) { pos_ += n; }

 private:
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

GrayImage read_pgm(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 2 || bytes[0] != 'P' || bytes[1] != '5') {
    throw Error(ErrorKind::kFormat, "missing P5 magic");
  }
  HeaderReader in(bytes);
  in.advance(2);
  if (bytes.size() > 2 && !std::isspace(bytes[2]) && bytes[2] != '#') {
    throw Error(ErrorKind::kFormat, "missing P5 magic");
  }
  const auto width = in.read_uint("width");
  const auto height = in.read_uint("height");
  const auto maxval = in.read_uint("maxval");
  if (width == 0 || height == 0) {
    throw Error(ErrorKind::kFormat, "zero image dimension");
  }
  if (maxval == 0 || maxval > 65535) {
    throw Error(ErrorKind::kFormat, "maxval out of range");
  }
  if (maxval > 255) {
    throw Error(ErrorKind::kUnsupportedDepth, "maxval " + std::to_string(maxval) + " exceeds 255");
  }
  in.consume_single_space();

  const std::size_t n = static_cast<std::size_t>(width * height);
  if (bytes.size() - in.pos() < n) {
    throw Error(ErrorKind::kTruncation, "expected " + std::to_string(n) + " samples, found " +
                                            std::to_string(bytes.size() - in.pos()));
  }
  auto first = bytes.begin() + static_cast<std::ptrdiff_t>(in.pos());
  std::vector<std::uint8_t> data(first, first + static_cast<std::ptrdiff_t>(n));
  for (auto& v : data) {
    if (v > maxval) {
      throw Error(ErrorKind::kFormat, "sample exceeds maxval");
    }
  }
  return GrayImage(width, height, std::move(data));
}

std::vector<std::uint8_t> write_pgm(const GrayImage& img) {
  const std::string header =
      "P5\n" + std::to_string(img.width()) + " " + std::to_string(img.height()) + "\n255\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  out.insert(out.end(), img.pixels().begin(), img.pixels().end());
  return out;
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error(ErrorKind::kIo, "cannot open " + path.string());
  }
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

GrayImage load_pgm(const std::filesystem::path& path) {
  const auto bytes = read_file(path);
  try {
    return read_pgm(bytes);
  } catch (const Error& e) {
    throw Error(e.kind(), path.string() + ": " + e.what());
  }
}

void write_file_atomic(const std::filesystem::path& path,
                       std::span<const std::uint8_t> bytes) {
  static std::atomic<unsigned> counter{0};
  auto tmp = path;
  tmp += ".tmp" + std::to_string(counter++);
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) {
      throw Error(ErrorKind::kIo, "cannot open " + tmp.string() + " for writing");
    }
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    out.flush();
    if (!out) {
      std::error_code ec;
      std::filesystem::remove(tmp, ec);
      throw Error(ErrorKind::kIo, "short write to " + tmp.string());
    }
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw Error(ErrorKind::kIo, "cannot move output into place at " + path.string());
  }
}

void write_file_atomic(const std::filesystem::path& path, const std::string& text) {
  write_file_atomic(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()),
                                    text.size()));
}

void save_pgm(const std::filesystem::path& path, const GrayImage& img) {
  write_file_atomic(path, write_pgm(img));
}

}  // namespace thermfuse
