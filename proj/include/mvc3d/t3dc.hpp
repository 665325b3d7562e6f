#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>

#include "mvc3d/tensor.hpp"

/// "T3DC" tensor files: magic `T3DC`, version byte (1), rank byte, rank
/// little-endian u32 extents, then the values as little-endian f32 in
/// row-major order. Byte layout is identical on every host.
namespace mvc3d::t3dc {

inline constexpr std::uint8_t kVersion = 1;

void write(std::ostream& os, const Tensor& t);
Tensor read(std::istream& is);

std::string encode(const Tensor& t);
Tensor decode(const std::string& bytes);

void save(const std::filesystem::path& path, const Tensor& t);
Tensor load(const std::filesystem::path& path);

}  // namespace mvc3d::t3dc
