#pragma once

#include <filesystem>

#include <nlohmann/json.hpp>

#include "mvc3d/model.hpp"

namespace mvc3d {

/// Single-file checkpoint: the 8-byte magic `MV3DCKPT`, a little-endian u32
/// manifest length, the JSON manifest, then one T3DC blob per tensor. The
/// manifest lists name, shape, offset and size of every blob (offsets are
/// relative to the first blob) next to the caller's metadata.
struct Checkpoint {
  ModelParams params;
  nlohmann::json meta;
};

void save_checkpoint(const std::filesystem::path& path, const ModelParams& params,
                     const nlohmann::json& meta);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace mvc3d
