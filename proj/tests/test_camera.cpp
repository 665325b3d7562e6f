#include <gtest/gtest.h>

#include <random>

#include "mvc3d/camera.hpp"
#include "mvc3d/error.hpp"
#include "support/fixtures.hpp"

using namespace mvc3d;

TEST(Camera, RoundTripThroughHeightPlane) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> px(0.0, 63.0), h(0.0, 2800.0);
  for (int c = 0; c < 5; ++c) {
    const CameraParams cam = mvc3d::testing::random_camera(rng);
    for (int i = 0; i < 1000; ++i) {
      const double u = px(rng), v = px(rng) * 47.0 / 63.0, z = h(rng);
      const WorldPoint w = image_to_world_at_height(cam, u, v, z);
      EXPECT_EQ(w.z, z);
      const ImagePoint ip = world_to_image(cam, w);
      EXPECT_NEAR(ip.u, u, 1e-6);
      EXPECT_NEAR(ip.v, v, 1e-6);
    }
  }
}

TEST(Camera, ProjectsKnownPoint) {
  // Camera at (0,0,10) looking straight down; the UnitX fallback makes
  // image x follow world +X.
  const CameraParams cam = look_at_camera({0, 0, 10}, {0, 0, 0}, 100.0, {101, 101});
  const ImagePoint c = world_to_image(cam, {0, 0, 0});
  EXPECT_NEAR(c.u, 50.0, 1e-12);
  EXPECT_NEAR(c.v, 50.0, 1e-12);
  EXPECT_TRUE(c.in_front);
  const ImagePoint p = world_to_image(cam, {1, 0, 0});
  EXPECT_NEAR(p.u, 60.0, 1e-9);
  EXPECT_FALSE(world_to_image(cam, {0, 0, 20}).in_front);
}

TEST(Camera, HorizontalRayIsDegenerate) {
  const CameraParams cam = look_at_camera({0, -10, 1}, {0, 0, 1}, 50.0, {64, 64});
  const double cy = cam.K(1, 2);
  EXPECT_THROW(image_to_world_at_height(cam, 10.0, cy, 0.0), DegenerateRayError);
}

TEST(Camera, RigConventions) {
  const CameraParams cam = look_at_camera({5000, 0, 3000}, {0, 0, 0}, 60.0, {64, 48});
  cam.validate();
  const Eigen::Vector3d c = cam.center();
  EXPECT_NEAR(c.x(), 5000.0, 1e-9);
  EXPECT_NEAR(c.z(), 3000.0, 1e-9);
  // Points higher in the world appear higher in the image (smaller v).
  EXPECT_LT(world_to_image(cam, {0, 0, 1000}).v, world_to_image(cam, {0, 0, 0}).v);
  EXPECT_NEAR(cam.depth({0, 0, 0}), std::hypot(5000.0, 3000.0), 1e-9);
}

TEST(Camera, ValidateRejectsBadParameters) {
  CameraParams cam = look_at_camera({5000, 0, 3000}, {0, 0, 0}, 60.0, {64, 48});
  CameraParams bad = cam;
  bad.R *= 1.1;
  EXPECT_THROW(bad.validate(), ConfigError);
  bad = cam;
  bad.K(0, 0) = -1.0;
  EXPECT_THROW(bad.validate(), ConfigError);
}

TEST(Camera, DownscaleMapsPixelBlocks) {
  const CameraParams cam = look_at_camera({5000, 1000, 3000}, {0, 0, 0}, 60.0, {64, 48});
  const CameraParams small = downscale_camera(cam, 4);
  EXPECT_EQ(small.image_size, (ImageSize{16, 12}));
  const WorldPoint p{300, -200, 900};
  const ImagePoint a = world_to_image(cam, p), b = world_to_image(small, p);
  // Original pixels 0..3 pool into pixel 0, whose centre is 1.5.
  EXPECT_NEAR(b.u, (a.u - 1.5) / 4.0, 1e-9);
  EXPECT_NEAR(b.v, (a.v - 1.5) / 4.0, 1e-9);
  EXPECT_THROW(downscale_camera(look_at_camera({1, 1, 1}, {0, 0, 0}, 10, {30, 20}), 4), ConfigError);
}

TEST(Camera, SamplingGridMarksCellsBehindCamera) {
  const CameraParams cam = look_at_camera({0, -3000, 1000}, {0, 0, 1000}, 60.0, {64, 64});
  VoxelGridSpec vox{-2000, -5000, 1000, 4, 2, 1, 1000};
  const Tensor g = precompute_sampling_grid(cam, vox, 1000.0);
  ASSERT_EQ(g.dims(), (Shape{2, 8}));
  // Row iy = 0 (y = -4500) is behind the camera at y = -3000.
  EXPECT_EQ(g[0], kBehindCamera);
  EXPECT_EQ(g[8], kBehindCamera);
  const ImagePoint ip = world_to_image(cam, {vox.cell_center_x(1), vox.cell_center_y(3), 1000.0});
  EXPECT_DOUBLE_EQ(g[7], ip.u);
  EXPECT_DOUBLE_EQ(g[15], ip.v);
}
