#include <gtest/gtest.h>

#include <random>

#include "mvc3d/error.hpp"
#include "mvc3d/losses.hpp"
#include "mvc3d/model.hpp"
#include "mvc3d/ops.hpp"
#include "mvc3d/tape.hpp"
#include "support/fixtures.hpp"
#include "support/gradcheck.hpp"

using namespace mvc3d;
using mvc3d::testing::random_tensor;

namespace {

ModelConfig small_config() {
  ModelConfig cfg;
  cfg.channel_scale = 0.125;
  cfg.n_views = 3;
  cfg.vox = {-2000.0, -2000.0, 250.0, 16, 16, 7, 400.0};
  cfg.image_size = {32, 32};
  return cfg;
}

std::vector<CameraParams> cams_for(const ModelConfig& cfg) {
  return mvc3d::testing::ring_cameras(cfg.image_size, 20.0);
}

std::vector<Tensor> random_images(const ModelConfig& cfg, std::mt19937_64& rng) {
  std::vector<Tensor> imgs;
  for (std::size_t v = 0; v < cfg.n_views; ++v)
    imgs.push_back(random_tensor({1, cfg.image_size.height, cfg.image_size.width}, rng, 0.0, 1.0));
  return imgs;
}

}  // namespace

TEST(Model, ReferenceLayerShapes) {
  ModelConfig cfg = small_config();
  cfg.channel_scale = 1.0;
  const auto view = view_branch_layers(cfg);
  EXPECT_EQ(view.front().kernel, (Shape{16, 1, 5, 5}));
  EXPECT_EQ(view.back().kernel, (Shape{1, 32, 5, 5}));
  EXPECT_FALSE(view.back().relu);
  const auto fusion = fusion_layers(cfg);
  EXPECT_EQ(fusion.front().kernel, (Shape{32, 96, 7, 5, 5}));
  EXPECT_EQ(fusion.back().kernel, (Shape{1, 32, 7, 5, 5}));
  EXPECT_FALSE(fusion.back().relu);
}

TEST(Model, ChannelScaleQuadruplesConvParameters) {
  ModelConfig a = small_config(), b = small_config();
  a.channel_scale = 0.5;
  b.channel_scale = 1.0;
  // Layers whose input and output are both scaled.
  const auto la = fusion_layers(a), lb = fusion_layers(b);
  for (std::size_t i = 1; i + 1 < la.size(); ++i) {
    EXPECT_DOUBLE_EQ(static_cast<double>(shape_numel(lb[i].kernel)) / shape_numel(la[i].kernel), 4.0);
  }
  const double ratio = static_cast<double>(init_params(b, 1).scalar_count()) / init_params(a, 1).scalar_count();
  EXPECT_GT(ratio, 3.5);
  EXPECT_LT(ratio, 4.1);
}

TEST(Model, OutputShapesAtReferenceResolution) {
  // Street-scale geometry with minimal channels keeps the forward cheap.
  ModelConfig cfg;
  cfg.channel_scale = 0.01;
  cfg.n_views = 3;
  cfg.vox = {-8000.0, -9600.0, 100.0, 192, 160, 28, 100.0};
  cfg.image_size = {676, 380};
  const auto cams = mvc3d::testing::ring_cameras(cfg.image_size, 400.0);
  Model m(cfg, cams, init_params(cfg, 3));
  std::vector<Tensor> imgs(3, Tensor({1, 380, 676}));
  const ModelOutput out = m.forward(imgs);
  EXPECT_EQ(out.volume.dims(), (Shape{1, 28, 192, 160}));
  ASSERT_EQ(out.view_maps.size(), 3u);
  EXPECT_EQ(out.view_maps[0].dims(), (Shape{1, 95, 169}));
}

TEST(Model, ZeroImagesGiveZeroOutputs) {
  const ModelConfig cfg = small_config();
  Model m(cfg, cams_for(cfg), init_params(cfg, 1));
  const std::vector<Tensor> imgs(3, Tensor({1, 32, 32}));
  const ModelOutput out = m.forward(imgs);
  for (double v : out.volume.values()) EXPECT_EQ(v, 0.0);
  for (const auto& vm : out.view_maps)
    for (double v : vm.values()) EXPECT_EQ(v, 0.0);
  EXPECT_EQ(count_from_volume(out.volume), 0.0);
}

TEST(Model, ForwardIsBitDeterministic) {
  const ModelConfig cfg = small_config();
  std::mt19937_64 rng(2);
  const auto imgs = random_images(cfg, rng);
  const Model a(cfg, cams_for(cfg), init_params(cfg, 9)), b(cfg, cams_for(cfg), init_params(cfg, 9));
  const Tensor ga = a.forward(imgs).volume, gb = b.forward(imgs).volume;
  for (std::size_t i = 0; i < ga.numel(); ++i) ASSERT_EQ(ga[i], gb[i]);
}

TEST(Model, EveryParameterReceivesGradient) {
  ModelConfig cfg = small_config();
  std::mt19937_64 rng(4);
  const auto imgs = random_images(cfg, rng);
  Model m(cfg, cams_for(cfg), init_params(cfg, 5));
  Tape tape;
  TapeScope scope(tape);
  const ModelOutput out = m.forward(imgs);
  const Tensor gt = random_tensor({1, 7, 16, 16}, rng, 0.0, 1.0);
  std::vector<Tensor> maps;
  for (int v = 0; v < 3; ++v) maps.push_back(random_tensor({1, 8, 8}, rng, 0.0, 1.0));
  const Tensor l = loss_total(loss_3d(out.volume, gt), loss_2d(out.view_maps, maps), Tensor::scalar(0.0),
                              LossWeights::for_stage(2, 0.0));
  tape.backward(l);
  for (const auto& e : m.params().entries()) {
    ASSERT_TRUE(e.value.has_grad()) << e.name;
    double n = 0;
    for (double g : e.value.grad()) n += g * g;
    EXPECT_GT(n, 0.0) << e.name;
  }
}

TEST(Model, ViewPermutationPermutesProjectedFeatures) {
  PrecisionScope dbl(Precision::Double);
  const ModelConfig cfg = small_config();
  std::mt19937_64 rng(6);
  const auto cams = cams_for(cfg);
  const auto feats = random_tensor({2, 8, 8}, rng);
  // Projection of a view depends only on that view's camera and features.
  const Projector p0(downscale_camera(cams[0], 4), cfg.vox), p2(downscale_camera(cams[2], 4), cfg.vox);
  const Model m(cfg, cams, init_params(cfg, 1));
  const std::vector<CameraParams> swapped{cams[2], cams[1], cams[0]};
  const Model ms(cfg, swapped, init_params(cfg, 1));
  const Tensor a = m.projector(0)(feats), b = ms.projector(2)(feats);
  for (std::size_t i = 0; i < a.numel(); ++i) ASSERT_EQ(a[i], b[i]);
  const Tensor c = p2(feats), d = ms.projector(0)(feats);
  for (std::size_t i = 0; i < c.numel(); ++i) ASSERT_EQ(c[i], d[i]);
  (void)p0;
}

TEST(Model, SeparateBranchesWhenNotShared) {
  ModelConfig cfg = small_config();
  cfg.share_extractor = false;
  const ModelParams p = init_params(cfg, 1);
  EXPECT_NO_THROW((void)p.at("view2.conv7.weight"));
  EXPECT_THROW((void)p.at("conv1.weight"), ConfigError);
  Model m(cfg, cams_for(cfg), p);
  std::mt19937_64 rng(1);
  EXPECT_EQ(m.forward(random_images(cfg, rng)).volume.dims(), (Shape{1, 7, 16, 16}));
}

TEST(Model, RejectsMismatchedInputs) {
  const ModelConfig cfg = small_config();
  Model m(cfg, cams_for(cfg), init_params(cfg, 1));
  EXPECT_THROW(m.forward(std::vector<Tensor>(2, Tensor({1, 32, 32}))), ShapeError);
  EXPECT_THROW(m.forward(std::vector<Tensor>(3, Tensor({1, 32, 28}))), ShapeError);
  ModelConfig bad = cfg;
  bad.image_size = {30, 32};
  EXPECT_THROW(init_params(bad, 1), ConfigError);
  EXPECT_THROW(Model(cfg, std::vector<CameraParams>(2, cams_for(cfg)[0]), init_params(cfg, 1)), ConfigError);
}

TEST(Model, CountFromVolume) {
  EXPECT_EQ(count_from_volume(Tensor({1, 2, 2, 2})), 0.0);
  EXPECT_DOUBLE_EQ(count_from_volume(Tensor::full({1, 1, 2, 2}, 5e3)), 2.0);
}
