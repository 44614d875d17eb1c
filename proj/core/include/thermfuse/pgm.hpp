#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "thermfuse/image.hpp"

namespace thermfuse {

/// Decodes a binary portable graymap ("P5", maxval <= 255). Header comments
/// are skipped; exactly width*height payload bytes are consumed and any
/// trailing bytes are ignored.
GrayImage read_pgm(std::span<const std::uint8_t> bytes);

/// Encodes as "P5\n<w> <h>\n255\n" followed by the raw samples.
std::vector<std::uint8_t> write_pgm(const GrayImage& img);

GrayImage load_pgm(const std::filesystem::path& path);

/// Writes through a temporary sibling file and renames it into place, so a
/// failure never leaves a partially written target.
void save_pgm(const std::filesystem::path& path, const GrayImage& img);

std::vector<std::uint8_t> read_file(const std::filesystem::path& path);
void write_file_atomic(const std::filesystem::path& path,
                       std::span<const std::uint8_t> bytes);
void write_file_atomic(const std::filesystem::path& path, const std::string& text);

}  // namespace thermfuse
