#include "mvc3d/voxel_grid.hpp"

#include <cmath>

#include "mvc3d/camera.hpp"
#include "mvc3d/error.hpp"

namespace mvc3d {

void VoxelGridSpec::validate() const {
  if (a < 1 || b < 1 || n < 1) throw ConfigError("voxel grid extents must be >= 1");
  if (!(cell_xy > 0.0) || !(h_vox > 0.0)) throw ConfigError("voxel sizes must be positive");
  if (!std::isfinite(origin_x) || !std::isfinite(origin_y)) {
    throw ConfigError("voxel grid origin must be finite");
  }
}

std::vector<double> VoxelGridSpec::height_planes() const {
  std::vector<double> planes(n);
  for (std::size_t l = 0; l < n; ++l) planes[l] = height_plane(l);
  return planes;
}

std::optional<VoxelGridSpec::Cell> VoxelGridSpec::locate(double x, double y) const {
  const double fx = std::floor((x - origin_x) / cell_xy);
  const double fy = std::floor((y - origin_y) / cell_xy);
  if (!(fx >= 0.0 && fx < static_cast<double>(b) && fy >= 0.0 && fy < static_cast<double>(a))) {
    return std::nullopt;
  }
  return Cell{static_cast<std::size_t>(fy), static_cast<std::size_t>(fx)};
}

bool VoxelGridSpec::contains(const WorldPoint& p) const {
  return locate(p.x, p.y).has_value() && p.z >= 0.0 && p.z < top();
}

}  // namespace mvc3d
