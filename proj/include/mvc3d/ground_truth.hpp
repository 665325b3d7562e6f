#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "mvc3d/camera.hpp"
#include "mvc3d/tensor.hpp"
#include "mvc3d/voxel_grid.hpp"

namespace mvc3d {

/// 3D density volumes carry 1e4 per person, 2D view maps 1e3 per head.
inline constexpr double kVolumeScale = 1.0e4;
inline constexpr double kMapScale = 1.0e3;
/// Head height assumed when a person is annotated in a single view.
inline constexpr double kFallbackHeadHeight = 1750.0;

struct HeadAnnotation {
  std::size_t view = 0;
  double u = 0.0, v = 0.0;
};

/// One person's head annotations across views, at most one per view.
struct PersonAnnotationSet {
  int person_id = 0;
  std::vector<HeadAnnotation> heads;
};

/// Candidate head heights {1000, 1010, ..., 2000} mm.
std::vector<double> default_head_heights();

/// Head position from corresponding annotations by height search: Z is the
/// candidate height whose per-view plane intersections have the smallest
/// spread around their mean (first minimum wins); (X, Y) is that mean.
/// A single annotation is lifted to kFallbackHeadHeight.
WorldPoint triangulate_head(const PersonAnnotationSet& person, std::span<const CameraParams> cameras,
                            std::span<const double> heights);
WorldPoint triangulate_head(const PersonAnnotationSet& person, std::span<const CameraParams> cameras);

/// Indices of inputs that were left out of a density map, and why.
struct SplatReport {
  std::size_t splatted = 0;
  std::vector<std::size_t> skipped;
};

struct DensityVolume {
  Tensor values;  ///< [1, n, a, b]
  VoxelGridSpec vox;
  double scale = kVolumeScale;
  double count() const;
};

struct DensityMap2D {
  Tensor values;  ///< [1, H, W]
  double scale = kMapScale;
  double count() const;
};

/// Sum of isotropic 3D Gaussians (sigma in mm) centred on each head,
/// truncated at 3 sigma and renormalised over the retained voxels, times
/// kVolumeScale. Points outside the grid box are skipped.
DensityVolume splat_3d(std::span<const WorldPoint> heads, const VoxelGridSpec& vox, double sigma_mm,
                       SplatReport* report = nullptr);

struct PixelPoint {
  double u = 0.0, v = 0.0;
};

/// Per-view density map: truncated (3 sigma), unit-mass 2D Gaussians in
/// pixel units, times kMapScale. Heads outside the image are skipped.
DensityMap2D rasterize_2d(std::span<const PixelPoint> heads, ImageSize size, double sigma_px,
                          SplatReport* report = nullptr);

}  // namespace mvc3d
