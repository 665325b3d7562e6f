#include "mvc3d/camera.hpp"

#include <cmath>

#include <Eigen/Dense>

#include "mvc3d/error.hpp"

namespace mvc3d {

void CameraParams::validate() const {
  if (!K.allFinite() || !R.allFinite() || !t.allFinite()) {
    throw ConfigError("camera parameters must be finite");
  }
  const Eigen::Matrix3d e = R.transpose() * R - Eigen::Matrix3d::Identity();
  if (e.cwiseAbs().maxCoeff() >= 1e-6 || std::abs(R.determinant() - 1.0) > 1e-6) {
    throw ConfigError("camera rotation is not orthonormal with det 1");
  }
  if (K(1, 0) != 0.0 || K(2, 0) != 0.0 || K(2, 1) != 0.0 || K(2, 2) != 1.0) {
    throw ConfigError("camera intrinsics must be upper triangular with K(2,2) = 1");
  }
  if (!(K(0, 0) > 0.0) || !(K(1, 1) > 0.0)) throw ConfigError("focal lengths must be positive");
  if (image_size.width == 0 || image_size.height == 0) throw ConfigError("empty camera image");
}

Eigen::Vector3d CameraParams::center() const { return -R.transpose() * t; }

double CameraParams::depth(const WorldPoint& p) const {
  return R.row(2).dot(Eigen::Vector3d(p.x, p.y, p.z)) + t.z();
}

ImagePoint world_to_image(const CameraParams& cam, const WorldPoint& p) {
  const Eigen::Vector3d pc = cam.R * Eigen::Vector3d(p.x, p.y, p.z) + cam.t;
  const Eigen::Vector3d q = cam.K * pc;
  return {q.x() / q.z(), q.y() / q.z(), pc.z() > 0.0};
}

WorldPoint image_to_world_at_height(const CameraParams& cam, double u, double v, double h) {
  const Eigen::Vector3d c = cam.center();
  // K is upper triangular: a triangular solve is exact enough for the round trip.
  const Eigen::Vector3d ray_cam =
      cam.K.triangularView<Eigen::Upper>().solve(Eigen::Vector3d(u, v, 1.0));
  const Eigen::Vector3d dir = cam.R.transpose() * ray_cam;
  if (std::abs(dir.z()) < 1e-12) {
    throw DegenerateRayError("viewing ray is parallel to the height plane");
  }
  const double s = (h - c.z()) / dir.z();
  return {c.x() + s * dir.x(), c.y() + s * dir.y(), h};
}

CameraParams look_at_camera(const Eigen::Vector3d& position, const Eigen::Vector3d& target,
                            double focal_px, ImageSize size) {
  const Eigen::Vector3d forward = (target - position).normalized();
  Eigen::Vector3d right = forward.cross(Eigen::Vector3d::UnitZ());
  if (right.norm() < 1e-9) right = Eigen::Vector3d::UnitX();  // looking straight up or down
  right.normalize();
  const Eigen::Vector3d down = forward.cross(right);

  CameraParams cam;
  cam.R.row(0) = right.transpose();
  cam.R.row(1) = down.transpose();
  cam.R.row(2) = forward.transpose();
  cam.t = -cam.R * position;
  cam.K << focal_px, 0.0, (static_cast<double>(size.width) - 1.0) / 2.0,  //
      0.0, focal_px, (static_cast<double>(size.height) - 1.0) / 2.0,     //
      0.0, 0.0, 1.0;
  cam.image_size = size;
  return cam;
}

CameraParams downscale_camera(const CameraParams& cam, std::size_t factor) {
  if (factor == 0 || cam.image_size.width % factor != 0 || cam.image_size.height % factor != 0) {
    throw ConfigError("image size not divisible by downscale factor");
  }
  const double f = static_cast<double>(factor);
  Eigen::Matrix3d s = Eigen::Matrix3d::Identity();
  s(0, 0) = s(1, 1) = 1.0 / f;
  s(0, 2) = s(1, 2) = -(f - 1.0) / (2.0 * f);
  CameraParams out = cam;
  out.K = s * cam.K;
  out.image_size = {cam.image_size.width / factor, cam.image_size.height / factor};
  return out;
}

Tensor precompute_sampling_grid(const CameraParams& cam, const VoxelGridSpec& vox, double h) {
  vox.validate();
  const std::size_t cells = vox.a * vox.b;
  Tensor grid({2, cells});
  auto g = grid.values_mut();
  for (std::size_t iy = 0; iy < vox.a; ++iy) {
    for (std::size_t ix = 0; ix < vox.b; ++ix) {
      const std::size_t m = iy * vox.b + ix;
      const ImagePoint ip = world_to_image(cam, {vox.cell_center_x(ix), vox.cell_center_y(iy), h});
      g[m] = ip.in_front ? ip.u : kBehindCamera;
      g[cells + m] = ip.in_front ? ip.v : kBehindCamera;
    }
  }
  return grid;
}

}  // namespace mvc3d
