#include "mvc3d/ground_truth.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "mvc3d/error.hpp"

namespace mvc3d {

std::vector<double> default_head_heights() {
  std::vector<double> hs;
  for (int h = 1000; h <= 2000; h += 10) hs.push_back(h);
  return hs;
}

namespace {

const CameraParams& camera_for(const HeadAnnotation& head, std::span<const CameraParams> cameras) {
  if (head.view >= cameras.size()) {
    throw FormatError("annotation references view " + std::to_string(head.view) + " but only " +
                      std::to_string(cameras.size()) + " cameras exist");
  }
  return cameras[head.view];
}

struct Lifted {
  double x, y;
};

}  // namespace

WorldPoint triangulate_head(const PersonAnnotationSet& person, std::span<const CameraParams> cameras,
                            std::span<const double> heights) {
  const auto& heads = person.heads;
  if (heads.empty()) {
    throw MissingAnnotationError("person " + std::to_string(person.person_id) +
                                 " has no annotations");
  }
  for (std::size_t i = 0; i < heads.size(); ++i) {
    for (std::size_t j = i + 1; j < heads.size(); ++j) {
      if (heads[i].view == heads[j].view) {
        throw FormatError("person " + std::to_string(person.person_id) +
                          " annotated twice in view " + std::to_string(heads[i].view));
      }
    }
  }
  if (heights.empty()) throw ConfigError("empty height search range");

  std::vector<Lifted> lifted(heads.size());
  auto lift_all = [&](double h) {
    for (std::size_t j = 0; j < heads.size(); ++j) {
      const WorldPoint w = image_to_world_at_height(camera_for(heads[j], cameras), heads[j].u, heads[j].v, h);
      lifted[j] = {w.x, w.y};
    }
  };
  auto mean_of = [&]() {
    double mx = 0.0, my = 0.0;
    for (const auto& p : lifted) {
      mx += p.x;
      my += p.y;
    }
    const double m = static_cast<double>(lifted.size());
    return Lifted{mx / m, my / m};
  };

  if (heads.size() == 1) {
    lift_all(kFallbackHeadHeight);
    return {lifted[0].x, lifted[0].y, kFallbackHeadHeight};
  }

  double best_h = heights.front();
  double best_spread = std::numeric_limits<double>::infinity();
  for (double h : heights) {
    lift_all(h);
    const Lifted c = mean_of();
    double spread = 0.0;
    for (const auto& p : lifted) spread += (p.x - c.x) * (p.x - c.x) + (p.y - c.y) * (p.y - c.y);
    if (spread < best_spread) {
      best_spread = spread;
      best_h = h;
    }
  }
  lift_all(best_h);
  const Lifted c = mean_of();
  return {c.x, c.y, best_h};
}

WorldPoint triangulate_head(const PersonAnnotationSet& person, std::span<const CameraParams> cameras) {
  const auto hs = default_head_heights();
  return triangulate_head(person, cameras, hs);
}

double DensityVolume::count() const {
  auto v = values.values();
  return std::accumulate(v.begin(), v.end(), 0.0) / scale;
}

double DensityMap2D::count() const {
  auto v = values.values();
  return std::accumulate(v.begin(), v.end(), 0.0) / scale;
}

namespace {

struct Range {
  std::size_t lo, hi;  // [lo, hi)
};

// Indices i in [0, count) whose centre origin + (i + 0.5) * step lies within
// radius of c.
Range index_window(double c, double radius, double origin, double step, std::size_t count) {
  const double lo = std::ceil((c - radius - origin) / step - 0.5);
  const double hi = std::floor((c + radius - origin) / step - 0.5);
  const double clo = std::max(lo, 0.0);
  const double chi = std::min(hi, static_cast<double>(count) - 1.0);
  if (chi < clo) return {0, 0};
  return {static_cast<std::size_t>(clo), static_cast<std::size_t>(chi) + 1};
}

}  // namespace

DensityVolume splat_3d(std::span<const WorldPoint> heads, const VoxelGridSpec& vox, double sigma_mm,
                       SplatReport* report) {
  vox.validate();
  if (!(sigma_mm > 0.0)) throw ConfigError("3D Gaussian sigma must be positive");
  DensityVolume out{Tensor({1, vox.n, vox.a, vox.b}), vox, kVolumeScale};
  auto dst = out.values.values_mut();
  SplatReport local;
  const double radius = 3.0 * sigma_mm;
  const double inv2s2 = 1.0 / (2.0 * sigma_mm * sigma_mm);

  std::vector<std::pair<std::size_t, double>> weights;
  for (std::size_t k = 0; k < heads.size(); ++k) {
    const WorldPoint& p = heads[k];
    if (!vox.contains(p)) {
      local.skipped.push_back(k);
      continue;
    }
    weights.clear();
    double total = 0.0;
    const Range zs = index_window(p.z, radius, 0.0, vox.h_vox, vox.n);
    const Range ys = index_window(p.y, radius, vox.origin_y, vox.cell_xy, vox.a);
    const Range xs = index_window(p.x, radius, vox.origin_x, vox.cell_xy, vox.b);
    for (std::size_t l = zs.lo; l < zs.hi; ++l) {
      const double dz = vox.height_plane(l) - p.z;
      for (std::size_t iy = ys.lo; iy < ys.hi; ++iy) {
        const double dy = vox.cell_center_y(iy) - p.y;
        for (std::size_t ix = xs.lo; ix < xs.hi; ++ix) {
          const double dx = vox.cell_center_x(ix) - p.x;
          const double d2 = dx * dx + dy * dy + dz * dz;
          if (d2 > radius * radius) continue;
          const double w = std::exp(-d2 * inv2s2);
          weights.emplace_back(vox.index(l, iy, ix), w);
          total += w;
        }
      }
    }
    if (weights.empty() || !(total > 0.0)) {
      // Kernel narrower than a voxel: all mass goes to the containing voxel.
      const auto cell = vox.locate(p.x, p.y);
      const auto l = std::min(static_cast<std::size_t>(p.z / vox.h_vox), vox.n - 1);
      weights.assign(1, {vox.index(l, cell->iy, cell->ix), 1.0});
      total = 1.0;
    }
    for (const auto& [idx, w] : weights) dst[idx] += kVolumeScale * w / total;
    ++local.splatted;
  }
  if (report != nullptr) *report = std::move(local);
  return out;
}

DensityMap2D rasterize_2d(std::span<const PixelPoint> heads, ImageSize size, double sigma_px,
                          SplatReport* report) {
  if (!(sigma_px > 0.0)) throw ConfigError("2D Gaussian sigma must be positive");
  if (size.width == 0 || size.height == 0) throw ConfigError("empty density map size");
  DensityMap2D out{Tensor({1, size.height, size.width}), kMapScale};
  auto dst = out.values.values_mut();
  SplatReport local;
  const double radius = 3.0 * sigma_px;
  const double inv2s2 = 1.0 / (2.0 * sigma_px * sigma_px);
  const double W = static_cast<double>(size.width), H = static_cast<double>(size.height);

  std::vector<std::pair<std::size_t, double>> weights;
  for (std::size_t k = 0; k < heads.size(); ++k) {
    const PixelPoint& h = heads[k];
    if (!(h.u >= -0.5 && h.u < W - 0.5 && h.v >= -0.5 && h.v < H - 0.5)) {
      local.skipped.push_back(k);
      continue;
    }
    weights.clear();
    double total = 0.0;
    // Pixel centres sit on integers: origin -0.5, unit step.
    const Range ys = index_window(h.v, radius, -0.5, 1.0, size.height);
    const Range xs = index_window(h.u, radius, -0.5, 1.0, size.width);
    for (std::size_t y = ys.lo; y < ys.hi; ++y) {
      const double dy = static_cast<double>(y) - h.v;
      for (std::size_t x = xs.lo; x < xs.hi; ++x) {
        const double dx = static_cast<double>(x) - h.u;
        const double d2 = dx * dx + dy * dy;
        if (d2 > radius * radius) continue;
        const double w = std::exp(-d2 * inv2s2);
        weights.emplace_back(y * size.width + x, w);
        total += w;
      }
    }
    if (weights.empty() || !(total > 0.0)) {
      const auto x = static_cast<std::size_t>(std::lround(std::clamp(h.u, 0.0, W - 1)));
      const auto y = static_cast<std::size_t>(std::lround(std::clamp(h.v, 0.0, H - 1)));
      weights.assign(1, {y * size.width + x, 1.0});
      total = 1.0;
    }
    for (const auto& [idx, w] : weights) dst[idx] += kMapScale * w / total;
    ++local.splatted;
  }
  if (report != nullptr) *report = std::move(local);
  return out;
}

}  // namespace mvc3d
