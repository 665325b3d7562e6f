#pragma once

#include <cstddef>

namespace mvc3d::detail {

/// Geometry of a same-size, zero-padded, stride-1 convolution over
/// [cin, depth, height, width]. 2D convolutions use depth = kd = 1.
struct ConvGeometry {
  std::size_t cin = 0, cout = 0;
  std::size_t depth = 1, height = 0, width = 0;
  std::size_t kd = 1, kh = 1, kw = 1;
};

void conv_forward(const ConvGeometry& g, const double* input, const double* kernel,
                  const double* bias, double* output);

/// Accumulates (+=) into whichever of grad_input, grad_kernel, grad_bias is
/// non-null.
void conv_backward(const ConvGeometry& g, const double* input, const double* kernel,
                   const double* grad_output, double* grad_input, double* grad_kernel,
                   double* grad_bias);

}  // namespace mvc3d::detail
