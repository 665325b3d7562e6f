#include <gtest/gtest.h>

#include <random>

#include "mvc3d/error.hpp"
#include "mvc3d/losses.hpp"
#include "mvc3d/ops.hpp"
#include "support/gradcheck.hpp"

using namespace mvc3d;
using mvc3d::testing::gradcheck;
using mvc3d::testing::random_tensor;

namespace {

Tensor mask_of(std::initializer_list<double> v) { return Tensor({1, 1, v.size()}, std::vector<double>(v)); }

}  // namespace

TEST(Loss2d, Examples) {
  PrecisionScope dbl(Precision::Double);
  std::mt19937_64 rng(1);
  const Tensor a = random_tensor({1, 4, 4}, rng);
  EXPECT_EQ(loss_2d(std::vector<Tensor>{a}, std::vector<Tensor>{a}).item(), 0.0);
  EXPECT_DOUBLE_EQ(loss_2d(std::vector<Tensor>{Tensor({1, 1, 1}, std::vector<double>{3.0})}, std::vector<Tensor>{Tensor({1, 1, 1}, std::vector<double>{1.0})}).item(), 4.0);
  const std::vector<Tensor> p{random_tensor({1, 4, 4}, rng), random_tensor({1, 4, 4}, rng)};
  const std::vector<Tensor> g{random_tensor({1, 4, 4}, rng), random_tensor({1, 4, 4}, rng)};
  double oracle = 0;
  for (int v = 0; v < 2; ++v) {
    double s = 0;
    for (std::size_t i = 0; i < 16; ++i) s += (p[v][i] - g[v][i]) * (p[v][i] - g[v][i]);
    oracle += s / 16.0;
  }
  EXPECT_NEAR(loss_2d(p, g).item(), oracle, 1e-12);
  EXPECT_THROW(loss_2d(p, std::vector<Tensor>{g[0]}), ShapeError);
  EXPECT_THROW(loss_2d(std::vector<Tensor>{Tensor({1, 4, 3})}, std::vector<Tensor>{g[0]}), ShapeError);
}

TEST(Loss3d, Examples) {
  PrecisionScope dbl(Precision::Double);
  EXPECT_DOUBLE_EQ(loss_3d(Tensor::full({1, 2, 2, 2}, 1.0), Tensor({1, 2, 2, 2})).item(), 1.0);
  std::mt19937_64 rng(2);
  const Tensor a = random_tensor({1, 3, 4, 5}, rng), b = random_tensor({1, 3, 4, 5}, rng);
  double s = 0;
  for (std::size_t i = 0; i < 60; ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  EXPECT_NEAR(loss_3d(a, b).item(), s / 60.0, 1e-12);
  EXPECT_EQ(loss_3d(a, a).item(), 0.0);
  EXPECT_THROW(loss_3d(a, Tensor({1, 3, 4, 4})), ShapeError);
}

TEST(Pcm, Examples) {
  const Tensor gt = mask_of({1, 1, 1, 1, 0, 0});
  EXPECT_NEAR(pcm(gt, mask_of({1, 1, 1, 1, 1, 1})), 4.0 / (4.0 + 1e-5), 1e-12);
  EXPECT_EQ(pcm(mask_of({0, 0, 0, 0, 0, 0}), mask_of({1, 1, 1, 1, 1, 1})), 0.0);
  EXPECT_NEAR(pcm(gt, mask_of({1, 1, 1, 0, 1, 1})), 3.0 / (4.0 + 1e-5), 1e-12);
  EXPECT_THROW(pcm(gt, mask_of({1, 1})), ShapeError);
}

TEST(LossPcm, Examples) {
  const std::vector<Tensor> gts{mask_of({1, 1, 0}), mask_of({0, 1, 1})};
  const std::vector<Tensor> full{mask_of({1, 1, 1}), mask_of({1, 1, 1})};
  const std::vector<Tensor> none{mask_of({0, 0, 0}), mask_of({0, 0, 0})};
  const double full_loss = loss_pcm(gts, full).item();
  EXPECT_LT(full_loss, 1e-5 * 2);
  EXPECT_NEAR(full_loss, 2 * (1e-5 / (2 + 1e-5)), 1e-9);
  EXPECT_DOUBLE_EQ(loss_pcm(gts, none).item(), 2.0);
  const std::vector<Tensor> mixed{mask_of({1, 0, 1}), mask_of({0.5, 1, 0})};
  const double oracle = (1 - 1.0 / (2 + 1e-5)) + (1 - 1.0 / (2 + 1e-5));
  EXPECT_NEAR(loss_pcm(gts, mixed).item(), oracle, 1e-6);
}

TEST(LossTotal, ScheduleAndExamples) {
  PrecisionScope dbl(Precision::Double);
  const auto s = [](double v) { return Tensor::scalar(v); };
  EXPECT_DOUBLE_EQ(loss_total(s(1), s(2), s(5), LossWeights::for_stage(1, 10.0)).item(), 3.0);
  EXPECT_DOUBLE_EQ(loss_total(s(1), s(1), s(0.1), LossWeights::for_stage(3, 10.0)).item(), 2.01);
  EXPECT_EQ(loss_total(s(0), s(0), s(0), LossWeights::for_stage(2, 10.0)).item(), 0.0);
  const LossWeights w2 = LossWeights::for_stage(2, 10.0);
  EXPECT_EQ(w2.beta, 0.01);
  EXPECT_EQ(w2.gamma, 0.0);
  EXPECT_THROW(loss_total(s(1), s(1), s(1), LossWeights{-1.0, 0.0, 1}), ConfigError);
  EXPECT_THROW(LossWeights::for_stage(4, 1.0), ConfigError);
}

TEST(LossGradient, AllLossesMatchFiniteDifferences) {
  std::mt19937_64 rng(3);
  for (int t = 0; t < 10; ++t) {
    const Tensor g0 = random_tensor({1, 3, 4}, rng), g1 = random_tensor({1, 3, 4}, rng);
    EXPECT_LT(gradcheck([&](const std::vector<Tensor>& in) { return loss_2d(in, std::vector<Tensor>{g0, g1}); },
                        {random_tensor({1, 3, 4}, rng), random_tensor({1, 3, 4}, rng)}, {0, 1}),
              1e-4);
    const Tensor v = random_tensor({1, 2, 3, 3}, rng);
    EXPECT_LT(gradcheck([&](const std::vector<Tensor>& in) { return loss_3d(in[0], v); },
                        {random_tensor({1, 2, 3, 3}, rng)}, {0}),
              1e-4);
    const std::vector<Tensor> gts{binary_mask(random_tensor({1, 3, 4}, rng), 0.0),
                                  binary_mask(random_tensor({1, 3, 4}, rng), 0.0)};
    EXPECT_LT(gradcheck([&](const std::vector<Tensor>& in) { return loss_pcm(gts, in); },
                        {random_tensor({1, 3, 4}, rng, 0, 1), random_tensor({1, 3, 4}, rng, 0, 1)}, {0, 1}),
              1e-4);
    const LossWeights w{0.3, 2.0, 3};
    EXPECT_LT(gradcheck([&](const std::vector<Tensor>& in) { return loss_total(in[0], in[1], in[2], w); },
                        {random_tensor({1}, rng), random_tensor({1}, rng), random_tensor({1}, rng)}, {0, 1, 2}),
              1e-4);
  }
}

TEST(PcmProperties, EnlargingProjectionNeverLowersPcm) {
  std::mt19937_64 rng(4);
  std::bernoulli_distribution b(0.3);
  for (int t = 0; t < 200; ++t) {
    Tensor gt({1, 8, 8}), proj({1, 8, 8});
    for (double& v : gt.values_mut()) v = b(rng);
    for (double& v : proj.values_mut()) v = b(rng);
    const double base = pcm(gt, proj);
    double m = 0;
    for (double v : gt.values()) m += v;
    EXPECT_GE(base, 0.0);
    EXPECT_LE(base, m / (m + kPcmAlpha));
    Tensor bigger = proj.clone();
    for (double& v : bigger.values_mut()) v = std::max(v, static_cast<double>(b(rng)));
    EXPECT_GE(pcm(gt, bigger), base);
  }
}
