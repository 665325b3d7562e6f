#pragma once

#include <cstddef>
#include <optional>
#include <vector>

namespace mvc3d {

struct WorldPoint;

/// Geometry of the scene voxel grid. Volumes are laid out [C, n, a, b]:
/// z (height) slices, then ground rows along world Y, then ground columns
/// along world X. Ground cell (iy, ix) covers
/// [x0 + ix*cell, x0 + (ix+1)*cell) x [y0 + iy*cell, y0 + (iy+1)*cell) and
/// height slice l covers [l*h_vox, (l+1)*h_vox) with its sampling plane at
/// the slice centre.
struct VoxelGridSpec {
  double origin_x = 0.0;  ///< mm
  double origin_y = 0.0;  ///< mm
  double cell_xy = 1.0;   ///< mm per ground cell
  std::size_t a = 1;      ///< cells along Y
  std::size_t b = 1;      ///< cells along X
  std::size_t n = 1;      ///< voxels along Z
  double h_vox = 1.0;     ///< voxel height, mm

  /// Throws ConfigError unless a, b, n >= 1 and cell_xy, h_vox > 0.
  void validate() const;

  double height_plane(std::size_t l) const { return (static_cast<double>(l) + 0.5) * h_vox; }
  std::vector<double> height_planes() const;
  double top() const { return static_cast<double>(n) * h_vox; }
  double extent_x() const { return static_cast<double>(b) * cell_xy; }
  double extent_y() const { return static_cast<double>(a) * cell_xy; }

  double cell_center_x(std::size_t ix) const {
    return origin_x + (static_cast<double>(ix) + 0.5) * cell_xy;
  }
  double cell_center_y(std::size_t iy) const {
    return origin_y + (static_cast<double>(iy) + 0.5) * cell_xy;
  }

  struct Cell {
    std::size_t iy, ix;
  };
  /// Ground cell containing (x, y), or nullopt outside the grid.
  std::optional<Cell> locate(double x, double y) const;

  /// True when the point lies inside the grid's bounding box, height included.
  bool contains(const WorldPoint& p) const;

  std::size_t voxel_count() const { return n * a * b; }
  std::size_t index(std::size_t l, std::size_t iy, std::size_t ix) const {
    return (l * a + iy) * b + ix;
  }
};

}  // namespace mvc3d
