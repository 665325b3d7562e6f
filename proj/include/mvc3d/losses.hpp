#pragma once

#include <span>

#include "mvc3d/tensor.hpp"

namespace mvc3d {

/// Threshold T applied to 3D predictions before back-projection.
inline constexpr double kVolumeMaskThreshold = 1.0e-4;
/// Threshold applied to 2D ground-truth density maps to form view masks.
inline constexpr double kViewMaskThreshold = 1.0e-3;
/// Stabiliser in the PCM denominator.
inline constexpr double kPcmAlpha = 1.0e-5;

/// Weights of the combined objective l3d + beta * l2d + gamma * lpcm.
struct LossWeights {
  double beta = 1.0;
  double gamma = 0.0;
  int stage = 1;

  /// Throws ConfigError on negative weights or a stage outside 1..3.
  void validate() const;

  /// Three-stage schedule: (1, 0), (0.01, 0), (0.01, gamma).
  static LossWeights for_stage(int stage, double stage3_gamma);
};

/// Sum over views of the per-view mean squared error.
Tensor loss_2d(std::span<const Tensor> preds, std::span<const Tensor> targets);

/// Mean squared error between predicted and ground-truth volumes.
Tensor loss_3d(const Tensor& pred, const Tensor& target);

/// [x > threshold] as a 0/1 tensor of the same shape.
Tensor binary_mask(const Tensor& x, double threshold);

/// Projection consistency |gt * proj|_1 / (|gt|_1 + alpha).
double pcm(const Tensor& gt_mask, const Tensor& proj_mask, double alpha = kPcmAlpha);

/// sum_i (1 - PCM_i). Differentiable with respect to the projected masks.
Tensor loss_pcm(std::span<const Tensor> gt_masks, std::span<const Tensor> proj_masks,
                double alpha = kPcmAlpha);

Tensor loss_total(const Tensor& l3d, const Tensor& l2d, const Tensor& lpcm, const LossWeights& w);

}  // namespace mvc3d
