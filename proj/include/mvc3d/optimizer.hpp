#pragma once

#include <vector>

#include "mvc3d/tensor.hpp"

namespace mvc3d {

struct AdamOptions {
  double learning_rate = 1.0e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1.0e-8;
};

/// Adaptive-moment optimiser over a fixed list of parameter tensors.
class Adam {
 public:
  Adam(std::vector<Tensor> params, AdamOptions opts = {});

  /// Applies one update from the parameters' current gradients, then clears
  /// them. Parameters without a gradient are left unchanged.
  void step();
  void set_learning_rate(double lr) { opts_.learning_rate = lr; }
  long steps() const { return t_; }

 private:
  std::vector<Tensor> params_;
  AdamOptions opts_;
  std::vector<std::vector<double>> m_, v_;
  long t_ = 0;
};

}  // namespace mvc3d
