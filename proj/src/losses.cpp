#include "mvc3d/losses.hpp"

#include <numeric>
#include <vector>

#include "mvc3d/error.hpp"
#include "mvc3d/ops.hpp"
#include "mvc3d/tape.hpp"

namespace mvc3d {

void LossWeights::validate() const {
  if (!(beta >= 0.0) || !(gamma >= 0.0)) throw ConfigError("loss weights must be non-negative");
  if (stage < 1 || stage > 3) throw ConfigError("training stage must be 1, 2 or 3");
}

LossWeights LossWeights::for_stage(int stage, double stage3_gamma) {
  LossWeights w;
  w.stage = stage;
  switch (stage) {
    case 1:
      w.beta = 1.0;
      w.gamma = 0.0;
      break;
    case 2:
      w.beta = 0.01;
      w.gamma = 0.0;
      break;
    case 3:
      w.beta = 0.01;
      w.gamma = stage3_gamma;
      break;
    default:
      throw ConfigError("training stage must be 1, 2 or 3");
  }
  w.validate();
  return w;
}

Tensor loss_2d(std::span<const Tensor> preds, std::span<const Tensor> targets) {
  if (preds.size() != targets.size() || preds.empty()) {
    throw ShapeError("loss_2d: need matching, non-empty prediction and target lists");
  }
  Tensor total = ops::mse(preds[0], targets[0]);
  for (std::size_t i = 1; i < preds.size(); ++i) {
    total = ops::add(total, ops::mse(preds[i], targets[i]));
  }
  return total;
}

Tensor loss_3d(const Tensor& pred, const Tensor& target) { return ops::mse(pred, target); }

Tensor binary_mask(const Tensor& x, double threshold) {
  Tensor out(x.dims());
  auto o = out.values_mut();
  auto v = x.values();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] = v[i] > threshold ? 1.0 : 0.0;
  return out;
}

double pcm(const Tensor& gt_mask, const Tensor& proj_mask, double alpha) {
  if (gt_mask.dims() != proj_mask.dims()) {
    throw ShapeError("pcm: mask shapes differ " + shape_str(gt_mask.dims()) + " vs " +
                     shape_str(proj_mask.dims()));
  }
  auto g = gt_mask.values(), p = proj_mask.values();
  double overlap = 0.0, mass = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    overlap += g[i] * p[i];
    mass += g[i];
  }
  return overlap / (mass + alpha);
}

Tensor loss_pcm(std::span<const Tensor> gt_masks, std::span<const Tensor> proj_masks, double alpha) {
  if (gt_masks.size() != proj_masks.size() || gt_masks.empty()) {
    throw ShapeError("loss_pcm: need matching, non-empty mask lists");
  }
  double total = 0.0;
  std::vector<double> denom(gt_masks.size());
  for (std::size_t i = 0; i < gt_masks.size(); ++i) {
    total += 1.0 - pcm(gt_masks[i], proj_masks[i], alpha);
    auto g = gt_masks[i].values();
    denom[i] = std::accumulate(g.begin(), g.end(), 0.0) + alpha;
  }
  Tensor out = Tensor::scalar(total);
  round_to_storage(out.values_mut());

  bool any = false;
  for (const Tensor& p : proj_masks) any = any || p.requires_grad();
  Tape* tape = active_tape();
  if (tape != nullptr && any) {
    out.set_requires_grad(true);
    std::vector<Tensor> gts(gt_masks.begin(), gt_masks.end());
    std::vector<Tensor> projs(proj_masks.begin(), proj_masks.end());
    tape->record("loss_pcm", [gts, projs, denom, out]() mutable {
      if (!out.has_grad()) return;
      const double g = out.grad()[0];
      for (std::size_t i = 0; i < projs.size(); ++i) {
        if (!projs[i].requires_grad()) continue;
        auto gp = projs[i].grad_mut();
        auto m = gts[i].values();
        for (std::size_t k = 0; k < gp.size(); ++k) gp[k] -= g * m[k] / denom[i];
      }
    });
  }
  return out;
}

Tensor loss_total(const Tensor& l3d, const Tensor& l2d, const Tensor& lpcm, const LossWeights& w) {
  w.validate();
  return ops::add(ops::add(l3d, ops::scale(l2d, w.beta)), ops::scale(lpcm, w.gamma));
}

}  // namespace mvc3d
