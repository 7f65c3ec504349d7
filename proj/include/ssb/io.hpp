#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>

#include "ssb/grid.hpp"

namespace ssb {

/// File-format or missing-file problem; the message names the file.
class LoadError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Writes via a sibling temp file and rename.
void write_file_atomic(const std::filesystem::path& path, std::string_view bytes);
std::string read_file(const std::filesystem::path& path);

/// 8-bit binary PGM (P5, maxval 255). Values are clamped to [0,1] and
/// rounded to the nearest of 256 levels.
std::string encode_pgm(const Grid& g);
Grid decode_pgm(std::string_view bytes, const std::string& name);
void write_pgm(const std::filesystem::path& path, const Grid& g);
/// Pixel values come back as byte / 255.
Grid read_pgm(const std::filesystem::path& path);
/// Loads a PGM and binarizes at byte value 128.
Grid read_mask_pgm(const std::filesystem::path& path);

/// Grayscale PFM ("Pf", little-endian) for continuous outputs.
void write_pfm(const std::filesystem::path& path, const Grid& g);

/// Rounds every value to its 8-bit stored level.
Grid quantize8(const Grid& g);

}  // namespace ssb
