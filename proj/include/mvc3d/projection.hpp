#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include "mvc3d/camera.hpp"
#include "mvc3d/tensor.hpp"
#include "mvc3d/voxel_grid.hpp"

namespace mvc3d {

/// Lifts a camera-view feature map onto every height plane of a voxel grid.
///
/// Slice l of the result is the feature map bilinearly sampled at the image
/// positions of the ground-cell centres raised to height_plane(l). Cameras
/// are fixed, so the sampling grids for all planes are computed once.
class Projector {
 public:
  Projector(CameraParams cam, VoxelGridSpec vox);

  /// features [C,H,W] with (W,H) == camera image size -> [C,n,a,b].
  Tensor operator()(const Tensor& features) const;

  /// Concatenated sampling grid [2, n*a*b], plane-major.
  const Tensor& grid() const { return grid_; }
  const CameraParams& camera() const { return cam_; }
  const VoxelGridSpec& voxels() const { return vox_; }

 private:
  CameraParams cam_;
  VoxelGridSpec vox_;
  Tensor grid_;
};

Tensor project_2d_to_3d(const Tensor& features, const CameraParams& cam, const VoxelGridSpec& vox);

/// Maps a 3D prediction back into one camera view.
///
/// Every pixel centre is intersected with each height plane; the voxel
/// containing the intersection (nearest-cell lookup, behind-camera and
/// out-of-grid hits ignored) is recorded once in a lookup table.
class BackProjector {
 public:
  BackProjector(CameraParams cam, VoxelGridSpec vox);

  /// sign(sum_l [G > T] at the pixel's voxel on plane l). G is [1,n,a,b];
  /// the result is a binary [1,H,W] mask without gradient.
  Tensor hard_mask(const Tensor& volume, double threshold) const;

  /// Differentiable surrogate of hard_mask: [G > T] becomes
  /// sigmoid((G - T) / tau) and sign(sum) becomes 1 - prod(1 - s_l).
  Tensor soft_mask(const Tensor& volume, double threshold, double tau) const;

  /// Voxel index hit by pixel p on plane l, or -1.
  std::int32_t voxel_at(std::size_t pixel, std::size_t plane) const {
    return (*lut_)[pixel * vox_.n + plane];
  }
  const CameraParams& camera() const { return cam_; }
  const VoxelGridSpec& voxels() const { return vox_; }

 private:
  void check_volume(const Tensor& volume) const;

  CameraParams cam_;
  VoxelGridSpec vox_;
  std::shared_ptr<const std::vector<std::int32_t>> lut_;
};

Tensor backproject_3d_to_2d_mask(const Tensor& volume, const CameraParams& cam,
                                 const VoxelGridSpec& vox, double threshold);

Tensor backproject_soft(const Tensor& volume, const CameraParams& cam, const VoxelGridSpec& vox,
                        double threshold, double tau);

}  // namespace mvc3d
