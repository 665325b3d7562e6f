#pragma once

#include <cmath>
#include <random>

#include "mvc3d/camera.hpp"
#include "mvc3d/voxel_grid.hpp"

namespace mvc3d::testing {

/// Camera on a random ring position above the origin looking at a point
/// near the origin.
inline CameraParams random_camera(std::mt19937_64& rng, ImageSize size = {64, 48}) {
  std::uniform_real_distribution<double> angle(0.0, 6.283185307179586), radius(4000.0, 9000.0),
      elev(3000.0, 9000.0), jitter(-500.0, 500.0), focal(30.0, 90.0);
  const double a = angle(rng), r = radius(rng);
  return look_at_camera({r * std::cos(a), r * std::sin(a), elev(rng)}, {jitter(rng), jitter(rng), 0.0}, focal(rng),
                        size);
}

/// Three cameras at 120 degree spacing around the origin.
inline std::vector<CameraParams> ring_cameras(ImageSize size = {640, 480}, double focal = 500.0) {
  std::vector<CameraParams> cams;
  for (int k = 0; k < 3; ++k) {
    const double a = 2.0943951023931953 * k + 0.3;
    cams.push_back(look_at_camera({9000.0 * std::cos(a), 9000.0 * std::sin(a), 6000.0}, {0.0, 0.0, 1000.0}, focal,
                                  size));
  }
  return cams;
}

}  // namespace mvc3d::testing
