#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include <Eigen/Dense>

#include "mvc3d/scene.hpp"

namespace mvc3d {

namespace {

// Ray parameter of the nearest point where the ray c + s*d (s > 0, |d| = 1)
// enters the vertical capsule of radius r around (x, y, 0)-(x, y, h), or a
// negative value on a miss.
double capsule_hit(const Eigen::Vector3d& c, const Eigen::Vector3d& d, double x, double y, double h,
                   double r) {
  double best = std::numeric_limits<double>::infinity();
  // Side of the cylinder.
  const double fx = c.x() - x, fy = c.y() - y;
  const double qa = d.x() * d.x() + d.y() * d.y();
  if (qa > 1e-15) {
    const double qb = 2.0 * (fx * d.x() + fy * d.y());
    const double qc = fx * fx + fy * fy - r * r;
    const double disc = qb * qb - 4.0 * qa * qc;
    if (disc >= 0.0) {
      const double root = std::sqrt(disc);
      for (double s : {(-qb - root) / (2.0 * qa), (-qb + root) / (2.0 * qa)}) {
        const double z = c.z() + s * d.z();
        if (s > 0.0 && z >= 0.0 && z <= h) best = std::min(best, s);
      }
    }
  }
  // End caps.
  for (double cz : {0.0, h}) {
    const Eigen::Vector3d m = c - Eigen::Vector3d(x, y, cz);
    const double b = m.dot(d);
    const double disc = b * b - (m.squaredNorm() - r * r);
    if (disc < 0.0) continue;
    const double root = std::sqrt(disc);
    for (double s : {-b - root, -b + root}) {
      if (s > 0.0) best = std::min(best, s);
    }
  }
  return std::isfinite(best) ? best : -1.0;
}

}  // namespace

std::vector<Tensor> render_views(const Scene& scene, int frame_id, ImageSize image_size,
                                 double body_radius) {
  const Frame& frame = scene.frame(frame_id);
  constexpr double kIntensity = 0.8;
  constexpr double kNoiseSigma = 0.02;
  std::vector<Tensor> views;
  for (std::size_t view = 0; view < scene.cameras.size(); ++view) {
    CameraParams cam = scene.cameras[view];
    if (!(cam.image_size == image_size)) {
      const double sx = static_cast<double>(image_size.width) / static_cast<double>(cam.image_size.width);
      const double sy = static_cast<double>(image_size.height) / static_cast<double>(cam.image_size.height);
      Eigen::Matrix3d S = Eigen::Matrix3d::Identity();
      S(0, 0) = sx;
      S(1, 1) = sy;
      S(0, 2) = 0.5 * (sx - 1.0);
      S(1, 2) = 0.5 * (sy - 1.0);
      cam.K = S * cam.K;
      cam.image_size = image_size;
    }
    const std::size_t W = image_size.width, H = image_size.height;
    Tensor img({1, H, W});
    auto px = img.values_mut();
    const Eigen::Vector3d c = cam.center();
    const Eigen::Matrix3d Kinv_Rt = cam.R.transpose() * cam.K.inverse();
    for (std::size_t v = 0; v < H; ++v) {
      for (std::size_t u = 0; u < W; ++u) {
        const Eigen::Vector3d d =
            (Kinv_Rt * Eigen::Vector3d(static_cast<double>(u), static_cast<double>(v), 1.0)).normalized();
        double nearest = std::numeric_limits<double>::infinity();
        for (const PersonRecord& p : frame.people) {
          const double s = capsule_hit(c, d, p.x, p.y, p.body_height, body_radius);
          if (s > 0.0) nearest = std::min(nearest, s);
        }
        if (std::isfinite(nearest)) px[v * W + u] = kIntensity;
      }
    }
    std::seed_seq seq{static_cast<std::uint32_t>(scene.seed), static_cast<std::uint32_t>(scene.seed >> 32),
                      static_cast<std::uint32_t>(frame_id), static_cast<std::uint32_t>(view)};
    std::mt19937_64 rng(seq);
    std::normal_distribution<double> noise(0.0, kNoiseSigma);
    for (double& x : px) x += noise(rng);
    round_to_storage(px);
    views.push_back(img);
  }
  return views;
}

}  // namespace mvc3d
