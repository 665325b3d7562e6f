#pragma once

#include <Eigen/Core>

#include "mvc3d/tensor.hpp"
#include "mvc3d/voxel_grid.hpp"

namespace mvc3d {

/// World coordinates in mm. Z is height above the ground plane Z = 0.
struct WorldPoint {
  double x = 0.0, y = 0.0, z = 0.0;
};

struct ImageSize {
  std::size_t width = 0, height = 0;
  bool operator==(const ImageSize&) const = default;
};

/// Pinhole camera. R and t map world to camera coordinates
/// (x right, y down, z forward): p_cam = R * p_world + t.
struct CameraParams {
  Eigen::Matrix3d K = Eigen::Matrix3d::Identity();
  Eigen::Matrix3d R = Eigen::Matrix3d::Identity();
  Eigen::Vector3d t = Eigen::Vector3d::Zero();
  ImageSize image_size;

  /// Throws ConfigError unless R is a rotation and K is upper triangular
  /// with positive focal lengths.
  void validate() const;
  Eigen::Vector3d center() const;
  /// Camera-frame depth of a world point.
  double depth(const WorldPoint& p) const;
};

struct ImagePoint {
  double u = 0.0, v = 0.0;
  bool in_front = false;
};

/// Sentinel image coordinate for grid cells that sit behind a camera.
inline constexpr double kBehindCamera = -1.0e6;

ImagePoint world_to_image(const CameraParams& cam, const WorldPoint& p);

/// Intersection of the viewing ray through pixel (u, v) with the plane
/// Z = h. The returned point has z == h exactly. Throws DegenerateRayError
/// if the ray is parallel to the plane.
WorldPoint image_to_world_at_height(const CameraParams& cam, double u, double v, double h);

/// Camera at `position` looking at `target` with square pixels and the
/// principal point at the image centre.
CameraParams look_at_camera(const Eigen::Vector3d& position, const Eigen::Vector3d& target,
                            double focal_px, ImageSize size);

/// The same camera at 1/`factor` resolution (two 2x2 poolings: factor 4).
/// Pooled pixel i sits at the centre of the block of original pixels it
/// covers. Image extents must be divisible by `factor`.
CameraParams downscale_camera(const CameraParams& cam, std::size_t factor);

/// Image coordinates [2, a*b] of every ground-cell centre of `vox` lifted to
/// height `h`. Column iy*b + ix holds (u, v); cells behind the camera carry
/// (kBehindCamera, kBehindCamera).
Tensor precompute_sampling_grid(const CameraParams& cam, const VoxelGridSpec& vox, double h);

}  // namespace mvc3d
