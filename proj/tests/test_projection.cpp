#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include <Eigen/Dense>

#include "mvc3d/error.hpp"
#include "mvc3d/losses.hpp"
#include "mvc3d/ops.hpp"
#include "mvc3d/projection.hpp"
#include "support/fixtures.hpp"
#include "support/gradcheck.hpp"
#include "support/raymarch.hpp"

using namespace mvc3d;
using mvc3d::testing::gradcheck;
using mvc3d::testing::random_camera;
using mvc3d::testing::random_tensor;
using mvc3d::testing::raymarch_mask;

namespace {

const VoxelGridSpec kVox{-2000.0, -1500.0, 250.0, 12, 16, 7, 400.0};

// Own pinhole projection, independent of world_to_image.
bool projects_inside(const CameraParams& cam, double x, double y, double z) {
  const Eigen::Vector3d pc = cam.R * Eigen::Vector3d(x, y, z) + cam.t;
  if (pc.z() <= 0) return false;
  const Eigen::Vector3d q = cam.K * pc;
  const double u = q.x() / q.z(), v = q.y() / q.z();
  return u >= 0 && v >= 0 && u <= cam.image_size.width - 1.0 && v <= cam.image_size.height - 1.0;
}

CameraParams overview_camera(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> a(0.0, 6.28318);
  const double t = a(rng);
  return look_at_camera({6000 * std::cos(t), 6000 * std::sin(t), 7000}, {0, 0, 1000}, 45.0, {48, 40});
}

}  // namespace

TEST(Project2dTo3d, ConstantFieldMarksVisibleCells) {
  PrecisionScope dbl(Precision::Double);
  std::mt19937_64 rng(3);
  const CameraParams cam = overview_camera(rng);
  const Tensor ones = Tensor::full({2, 40, 48}, 1.0);
  const Tensor vol = project_2d_to_3d(ones, cam, kVox);
  ASSERT_EQ(vol.dims(), (Shape{2, 7, 12, 16}));
  std::size_t inside = 0;
  for (std::size_t c = 0; c < 2; ++c)
    for (std::size_t l = 0; l < 7; ++l)
      for (std::size_t iy = 0; iy < 12; ++iy)
        for (std::size_t ix = 0; ix < 16; ++ix) {
          const bool vis = projects_inside(cam, kVox.cell_center_x(ix), kVox.cell_center_y(iy), kVox.height_plane(l));
          inside += vis;
          EXPECT_NEAR(vol[((c * 7 + l) * 12 + iy) * 16 + ix], vis ? 1.0 : 0.0, 1e-12);
        }
  EXPECT_GT(inside, 0u);
}

TEST(Project2dTo3d, IsLinear) {
  PrecisionScope dbl(Precision::Double);
  std::mt19937_64 rng(4);
  const CameraParams cam = overview_camera(rng);
  const Tensor f1 = random_tensor({3, 40, 48}, rng), f2 = random_tensor({3, 40, 48}, rng);
  const Tensor lhs = project_2d_to_3d(ops::add(ops::scale(f1, 2.5), ops::scale(f2, -0.75)), cam, kVox);
  const Tensor rhs = ops::add(ops::scale(project_2d_to_3d(f1, cam, kVox), 2.5),
                              ops::scale(project_2d_to_3d(f2, cam, kVox), -0.75));
  for (std::size_t i = 0; i < lhs.numel(); ++i) ASSERT_NEAR(lhs[i], rhs[i], 1e-9);
}

TEST(Project2dTo3d, RejectsMismatchedFeatures) {
  std::mt19937_64 rng(5);
  const CameraParams cam = overview_camera(rng);
  EXPECT_THROW(project_2d_to_3d(Tensor({1, 40, 47}), cam, kVox), ShapeError);
}

TEST(Project2dTo3d, BrightHeadPixelPeaksAtHeadVoxel) {
  PrecisionScope dbl(Precision::Double);
  // Large cells and sharp cameras: neighbouring cell centres are several
  // pixels apart, so only the head voxel is lit in both views.
  const VoxelGridSpec vox{-2000.0, -2000.0, 200.0, 20, 20, 7, 400.0};
  const auto cams = mvc3d::testing::ring_cameras({320, 240}, 260.0);
  std::mt19937_64 rng(6);
  std::uniform_int_distribution<std::size_t> cell(3, 16), plane(2, 5);
  for (int trial = 0; trial < 10; ++trial) {
    const std::size_t ix = cell(rng), iy = cell(rng), l = plane(rng);
    const WorldPoint head{vox.cell_center_x(ix), vox.cell_center_y(iy), vox.height_plane(l)};
    Tensor product = Tensor::full({1, 7, 20, 20}, 1.0);
    for (int v = 0; v < 2; ++v) {
      const ImagePoint ip = world_to_image(cams[v], head);
      Tensor img({1, 240, 320});
      img.values_mut()[std::lround(ip.v) * 320 + std::lround(ip.u)] = 1.0;
      const Tensor p = project_2d_to_3d(img, cams[v], vox);
      for (std::size_t i = 0; i < p.numel(); ++i) product.values_mut()[i] *= p[i];
    }
    const auto vals = product.values();
    const auto best = std::max_element(vals.begin(), vals.end()) - vals.begin();
    EXPECT_EQ(static_cast<std::size_t>(best), vox.index(l, iy, ix));
  }
}

TEST(BackProject, ZeroVolumeGivesEmptyMask) {
  std::mt19937_64 rng(8);
  const Tensor m = backproject_3d_to_2d_mask(Tensor({1, 7, 12, 16}), overview_camera(rng), kVox, 1e-4);
  for (double v : m.values()) EXPECT_EQ(v, 0.0);
}

TEST(BackProject, MatchesRayMarchingOracle) {
  std::mt19937_64 rng(9);
  std::bernoulli_distribution on(0.03);
  for (int trial = 0; trial < 5; ++trial) {
    const CameraParams cam = overview_camera(rng);
    Tensor G({1, 7, 12, 16});
    for (double& v : G.values_mut()) v = on(rng) ? 1.0 : 0.0;
    const Tensor m = backproject_3d_to_2d_mask(G, cam, kVox, 1e-4);
    const Tensor oracle = raymarch_mask(G, cam, kVox, 1e-4);
    for (std::size_t i = 0; i < m.numel(); ++i) ASSERT_EQ(m[i], oracle[i]) << "pixel " << i;
  }
}

TEST(BackProject, ScaleInvariantAndIdempotent) {
  std::mt19937_64 rng(10);
  const CameraParams cam = overview_camera(rng);
  Tensor G({1, 7, 12, 16});
  std::bernoulli_distribution on(0.05);
  std::uniform_real_distribution<double> mag(2e-4, 5.0);
  for (double& v : G.values_mut()) v = on(rng) ? mag(rng) : 0.0;
  const Tensor m = backproject_3d_to_2d_mask(G, cam, kVox, 1e-4);
  const Tensor m2 = backproject_3d_to_2d_mask(ops::scale(G, 2.0), cam, kVox, 1e-4);
  const Tensor gm = backproject_3d_to_2d_mask(binary_mask(G, 1e-4), cam, kVox, 1e-4);
  for (std::size_t i = 0; i < m.numel(); ++i) {
    EXPECT_EQ(m[i], m2[i]);
    EXPECT_EQ(m[i], gm[i]);
  }
  EXPECT_THROW(backproject_3d_to_2d_mask(G, cam, kVox, 0.0), ConfigError);
  EXPECT_THROW(backproject_3d_to_2d_mask(Tensor({1, 7, 12, 15}), cam, kVox, 1e-4), ShapeError);
}

TEST(BackProject, CoversProjectedVoxelCentre) {
  std::mt19937_64 rng(11);
  std::uniform_int_distribution<std::size_t> l(0, 6), iy(0, 11), ix(0, 15);
  std::size_t checked = 0;
  for (int trial = 0; trial < 100; ++trial) {
    // Narrow field of view so every cell spans more than a pixel.
    std::uniform_real_distribution<double> a(0.0, 6.28318);
    const double t = a(rng);
    const CameraParams cam = look_at_camera({6000 * std::cos(t), 6000 * std::sin(t), 7000}, {0, 0, 1000}, 150.0, {48, 40});
    const std::size_t L = l(rng), Y = iy(rng), X = ix(rng);
    Tensor G({1, 7, 12, 16});
    G.values_mut()[kVox.index(L, Y, X)] = 1.0;
    const ImagePoint ip = world_to_image(cam, {kVox.cell_center_x(X), kVox.cell_center_y(Y), kVox.height_plane(L)});
    if (!ip.in_front || ip.u < 1 || ip.v < 1 || ip.u > 46 || ip.v > 38) continue;
    const Tensor m = backproject_3d_to_2d_mask(G, cam, kVox, 1e-4);
    bool covered = false;
    for (long dy = -1; dy <= 1; ++dy)
      for (long dx = -1; dx <= 1; ++dx)
        covered |= m[(std::lround(ip.v) + dy) * 48 + std::lround(ip.u) + dx] == 1.0;
    EXPECT_TRUE(covered);
    ++checked;
  }
  EXPECT_GE(checked, 10u);
}

TEST(BackProjectSoft, ZeroVolumeClosedForm) {
  PrecisionScope dbl(Precision::Double);
  std::mt19937_64 rng(12);
  const CameraParams cam = overview_camera(rng);
  const double T = 1e-4, tau = T / 10.0;
  const BackProjector bp(cam, kVox);
  const Tensor s = bp.soft_mask(Tensor({1, 7, 12, 16}), T, tau);
  const double sig = 1.0 / (1.0 + std::exp(T / tau));
  for (std::size_t p = 0; p < s.numel(); ++p) {
    int k = 0;
    for (std::size_t l = 0; l < 7; ++l) k += bp.voxel_at(p, l) >= 0;
    EXPECT_NEAR(s[p], 1.0 - std::pow(1.0 - sig, k), 1e-12);
    EXPECT_LT(s[p], 0.01);
  }
}

TEST(BackProjectSoft, MonotoneInVolume) {
  std::mt19937_64 rng(13);
  const CameraParams cam = overview_camera(rng);
  const Tensor G = random_tensor({1, 7, 12, 16}, rng, 0.0, 2.0);
  const Tensor base = backproject_soft(G, cam, kVox, 1.0, 0.3);
  std::uniform_int_distribution<std::size_t> pick(0, G.numel() - 1);
  for (int t = 0; t < 20; ++t) {
    Tensor H = G.clone();
    H.values_mut()[pick(rng)] += 0.5;
    const Tensor up = backproject_soft(H, cam, kVox, 1.0, 0.3);
    for (std::size_t i = 0; i < up.numel(); ++i) ASSERT_GE(up[i], base[i]);
  }
}

TEST(BackProjectSoft, AgreesWithHardMaskAwayFromThreshold) {
  std::mt19937_64 rng(14);
  const CameraParams cam = overview_camera(rng);
  const double T = 1e-4, tau = T / 10.0;
  Tensor G({1, 7, 12, 16});
  std::bernoulli_distribution on(0.05);
  for (double& v : G.values_mut()) v = on(rng) ? T + 20 * tau : T - 20 * tau;
  const Tensor hard = backproject_3d_to_2d_mask(G, cam, kVox, T);
  const Tensor soft = backproject_soft(G, cam, kVox, T, tau);
  std::size_t agree = 0;
  for (std::size_t i = 0; i < hard.numel(); ++i) agree += (soft[i] > 0.5) == (hard[i] > 0.5);
  EXPECT_GT(static_cast<double>(agree) / hard.numel(), 0.99);
}

TEST(BackProjectSoft, GradientMatchesFiniteDifferences) {
  std::mt19937_64 rng(15);
  const VoxelGridSpec vox{-1000.0, -1000.0, 500.0, 4, 4, 2, 1000.0};
  const CameraParams cam = look_at_camera({4000, 3000, 6000}, {0, 0, 500}, 20.0, {16, 12});
  for (int t = 0; t < 10; ++t) {
    const Tensor target = random_tensor({1, 12, 16}, rng, 0.0, 1.0);
    const double err = gradcheck(
        [&](const std::vector<Tensor>& in) { return ops::mse(backproject_soft(in[0], cam, vox, 0.5, 0.2), target); },
        {random_tensor({1, 2, 4, 4}, rng, 0.0, 1.0)}, {0});
    EXPECT_LT(err, 1e-4);
  }
}
