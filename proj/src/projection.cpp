#include "mvc3d/projection.hpp"

#include <cmath>

#include "mvc3d/error.hpp"
#include "mvc3d/ops.hpp"
#include "mvc3d/tape.hpp"

namespace mvc3d {

Projector::Projector(CameraParams cam, VoxelGridSpec vox) : cam_(std::move(cam)), vox_(vox) {
  vox_.validate();
  std::vector<Tensor> planes;
  planes.reserve(vox_.n);
  for (std::size_t l = 0; l < vox_.n; ++l) {
    planes.push_back(precompute_sampling_grid(cam_, vox_, vox_.height_plane(l)));
  }
  grid_ = ops::concat(planes, 1);
}

Tensor Projector::operator()(const Tensor& features) const {
  if (features.rank() != 3 || features.dim(1) != cam_.image_size.height ||
      features.dim(2) != cam_.image_size.width) {
    throw ShapeError("project_2d_to_3d: features " + shape_str(features.dims()) +
                     " do not match camera image " + std::to_string(cam_.image_size.width) + "x" +
                     std::to_string(cam_.image_size.height));
  }
  const Tensor sampled = ops::bilinear_sample(features, grid_);
  return ops::reshape(sampled, {features.dim(0), vox_.n, vox_.a, vox_.b});
}

Tensor project_2d_to_3d(const Tensor& features, const CameraParams& cam, const VoxelGridSpec& vox) {
  return Projector(cam, vox)(features);
}

BackProjector::BackProjector(CameraParams cam, VoxelGridSpec vox) : cam_(std::move(cam)), vox_(vox) {
  vox_.validate();
  const std::size_t W = cam_.image_size.width, H = cam_.image_size.height;
  auto lut = std::make_shared<std::vector<std::int32_t>>(W * H * vox_.n, -1);
  for (std::size_t y = 0; y < H; ++y) {
    for (std::size_t x = 0; x < W; ++x) {
      for (std::size_t l = 0; l < vox_.n; ++l) {
        WorldPoint p;
        try {
          p = image_to_world_at_height(cam_, static_cast<double>(x), static_cast<double>(y),
                                       vox_.height_plane(l));
        } catch (const DegenerateRayError&) {
          continue;
        }
        if (!(cam_.depth(p) > 0.0)) continue;
        const auto cell = vox_.locate(p.x, p.y);
        if (!cell) continue;
        (*lut)[(y * W + x) * vox_.n + l] =
            static_cast<std::int32_t>(vox_.index(l, cell->iy, cell->ix));
      }
    }
  }
  lut_ = std::move(lut);
}

void BackProjector::check_volume(const Tensor& volume) const {
  const Shape expected{1, vox_.n, vox_.a, vox_.b};
  if (volume.dims() != expected) {
    throw ShapeError("back-projection: volume " + shape_str(volume.dims()) + " expected " +
                     shape_str(expected));
  }
}

Tensor BackProjector::hard_mask(const Tensor& volume, double threshold) const {
  check_volume(volume);
  if (!(threshold > 0.0)) throw ConfigError("back-projection threshold must be positive");
  const std::size_t pixels = cam_.image_size.width * cam_.image_size.height;
  Tensor mask({1, cam_.image_size.height, cam_.image_size.width});
  auto m = mask.values_mut();
  auto g = volume.values();
  for (std::size_t p = 0; p < pixels; ++p) {
    int hits = 0;
    for (std::size_t l = 0; l < vox_.n; ++l) {
      const std::int32_t idx = voxel_at(p, l);
      if (idx >= 0 && g[static_cast<std::size_t>(idx)] > threshold) ++hits;
    }
    m[p] = hits > 0 ? 1.0 : 0.0;
  }
  return mask;
}

namespace {

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace

Tensor BackProjector::soft_mask(const Tensor& volume, double threshold, double tau) const {
  check_volume(volume);
  if (!(tau > 0.0)) throw ConfigError("soft back-projection temperature must be positive");
  const std::size_t n = vox_.n;
  const std::size_t pixels = cam_.image_size.width * cam_.image_size.height;
  Tensor mask({1, cam_.image_size.height, cam_.image_size.width});
  auto m = mask.values_mut();
  auto g = volume.values();
  for (std::size_t p = 0; p < pixels; ++p) {
    double keep = 1.0;  // prod(1 - s_l)
    for (std::size_t l = 0; l < n; ++l) {
      const std::int32_t idx = voxel_at(p, l);
      if (idx < 0) continue;
      keep *= sigmoid(-(g[static_cast<std::size_t>(idx)] - threshold) / tau);
    }
    m[p] = 1.0 - keep;
  }
  round_to_storage(m);

  if (Tape* tape = recording_tape({&volume})) {
    mask.set_requires_grad(true);
    tape->record("backproject_soft", [lut = lut_, volume, mask, threshold, tau, n,
                                      pixels]() mutable {
      if (!mask.has_grad()) return;
      auto go = mask.grad();
      auto g = volume.values();
      auto gv = volume.grad_mut();
      std::vector<double> s(n), one_minus(n), prefix(n + 1), suffix(n + 1);
      for (std::size_t p = 0; p < pixels; ++p) {
        if (go[p] == 0.0) continue;
        for (std::size_t l = 0; l < n; ++l) {
          const std::int32_t idx = (*lut)[p * n + l];
          if (idx < 0) {
            s[l] = 0.0;
            one_minus[l] = 1.0;
          } else {
            const double x = (g[static_cast<std::size_t>(idx)] - threshold) / tau;
            s[l] = sigmoid(x);
            one_minus[l] = sigmoid(-x);
          }
        }
        prefix[0] = 1.0;
        for (std::size_t l = 0; l < n; ++l) prefix[l + 1] = prefix[l] * one_minus[l];
        suffix[n] = 1.0;
        for (std::size_t l = n; l-- > 0;) suffix[l] = suffix[l + 1] * one_minus[l];
        for (std::size_t l = 0; l < n; ++l) {
          const std::int32_t idx = (*lut)[p * n + l];
          if (idx < 0) continue;
          // d(1 - prod)/ds_l = prod_{k != l}(1 - s_k); ds/dG = s(1-s)/tau
          const double d_out_ds = prefix[l] * suffix[l + 1];
          gv[static_cast<std::size_t>(idx)] += go[p] * d_out_ds * s[l] * one_minus[l] / tau;
        }
      }
    });
  }
  return mask;
}

Tensor backproject_3d_to_2d_mask(const Tensor& volume, const CameraParams& cam,
                                 const VoxelGridSpec& vox, double threshold) {
  return BackProjector(cam, vox).hard_mask(volume, threshold);
}

Tensor backproject_soft(const Tensor& volume, const CameraParams& cam, const VoxelGridSpec& vox,
                        double threshold, double tau) {
  return BackProjector(cam, vox).soft_mask(volume, threshold, tau);
}

}  // namespace mvc3d
