#pragma once

#include <vector>

#include "mvc3d/tensor.hpp"

/// Differentiable tensor operations. Every op records itself on the active
/// tape when at least one input requires a gradient. There is no
/// broadcasting: operands must have exactly the documented shapes.
namespace mvc3d::ops {

/// Same-size 2D convolution with zero padding (kh/2, kw/2).
/// input [Cin,H,W], kernel [Cout,Cin,kh,kw] (odd kh, kw), bias [Cout].
Tensor conv2d(const Tensor& input, const Tensor& kernel, const Tensor& bias);

/// Same-size 3D convolution with zero padding in all three spatial dims.
/// input [Cin,D,H,W], kernel [Cout,Cin,kd,kh,kw], bias [Cout].
Tensor conv3d(const Tensor& input, const Tensor& kernel, const Tensor& bias);

/// 2x2 max pooling with stride 2 on [C,H,W]; H and W must be even.
/// Ties go to the first element of the window in row-major order.
Tensor maxpool2(const Tensor& input);

/// Bilinear sampling of input [C,H,W] at coords [2,M] -> [C,M].
///
/// coords row 0 holds the column (u, in [0,W-1]) and row 1 the row
/// (v, in [0,H-1]) in continuous pixel units with pixel centres on integers.
/// Points outside that closed box sample to zero and pass no gradient.
Tensor bilinear_sample(const Tensor& input, const Tensor& coords);

Tensor relu(const Tensor& x);
Tensor add(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& x, double factor);
Tensor concat(const std::vector<Tensor>& parts, std::size_t axis);
Tensor reshape(const Tensor& x, Shape dims);
/// Sum of all elements, as a one-element tensor.
Tensor sum(const Tensor& x);
/// Mean squared error, divided by the element count.
Tensor mse(const Tensor& pred, const Tensor& target);

}  // namespace mvc3d::ops
