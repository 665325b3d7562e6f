#include "mvc3d/ops.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "conv_kernels.hpp"
#include "mvc3d/error.hpp"
#include "mvc3d/tape.hpp"

namespace mvc3d::ops {

namespace {

void require_rank(const Tensor& t, std::size_t rank, const char* op, const char* what) {
  if (!t.defined() || t.rank() != rank) {
    throw ShapeError(std::string(op) + ": " + what + " must have rank " + std::to_string(rank) +
                     ", got " + shape_str(t.dims()));
  }
}

void require_same(const Tensor& a, const Tensor& b, const char* op) {
  if (a.dims() != b.dims()) {
    throw ShapeError(std::string(op) + ": shape mismatch " + shape_str(a.dims()) + " vs " +
                     shape_str(b.dims()));
  }
}

void add_into(std::span<double> dst, std::span<const double> src) {
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
}

Tensor conv_common(const char* name, const Tensor& input, const Tensor& kernel, const Tensor& bias,
                   const detail::ConvGeometry& g, Shape out_dims) {
  if (!bias.defined() || bias.rank() != 1 || bias.dim(0) != g.cout) {
    throw ShapeError(std::string(name) + ": bias must be [" + std::to_string(g.cout) + "], got " +
                     shape_str(bias.dims()));
  }
  if (g.kd % 2 == 0 || g.kh % 2 == 0 || g.kw % 2 == 0) {
    throw ShapeError(std::string(name) + ": kernel extents must be odd, got " +
                     shape_str(kernel.dims()));
  }
  Tensor out(std::move(out_dims));
  detail::conv_forward(g, input.values().data(), kernel.values().data(), bias.values().data(),
                       out.values_mut().data());
  round_to_storage(out.values_mut());

  if (Tape* tape = recording_tape({&input, &kernel, &bias})) {
    out.set_requires_grad(true);
    tape->record(name, [g, input, kernel, bias, out]() mutable {
      if (!out.has_grad()) return;
      double* gin = input.requires_grad() ? input.grad_mut().data() : nullptr;
      double* gk = kernel.requires_grad() ? kernel.grad_mut().data() : nullptr;
      double* gb = bias.requires_grad() ? bias.grad_mut().data() : nullptr;
      detail::conv_backward(g, input.values().data(), kernel.values().data(), out.grad().data(), gin,
                            gk, gb);
    });
  }
  return out;
}

}  // namespace

Tensor conv2d(const Tensor& input, const Tensor& kernel, const Tensor& bias) {
  require_rank(input, 3, "conv2d", "input");
  require_rank(kernel, 4, "conv2d", "kernel");
  if (kernel.dim(1) != input.dim(0)) {
    throw ShapeError("conv2d: channel mismatch, input " + shape_str(input.dims()) + " kernel " +
                     shape_str(kernel.dims()));
  }
  detail::ConvGeometry g;
  g.cin = input.dim(0);
  g.cout = kernel.dim(0);
  g.height = input.dim(1);
  g.width = input.dim(2);
  g.kh = kernel.dim(2);
  g.kw = kernel.dim(3);
  return conv_common("conv2d", input, kernel, bias, g, {g.cout, g.height, g.width});
}

Tensor conv3d(const Tensor& input, const Tensor& kernel, const Tensor& bias) {
  require_rank(input, 4, "conv3d", "input");
  require_rank(kernel, 5, "conv3d", "kernel");
  if (kernel.dim(1) != input.dim(0)) {
    throw ShapeError("conv3d: channel mismatch, input " + shape_str(input.dims()) + " kernel " +
                     shape_str(kernel.dims()));
  }
  detail::ConvGeometry g;
  g.cin = input.dim(0);
  g.cout = kernel.dim(0);
  g.depth = input.dim(1);
  g.height = input.dim(2);
  g.width = input.dim(3);
  g.kd = kernel.dim(2);
  g.kh = kernel.dim(3);
  g.kw = kernel.dim(4);
  return conv_common("conv3d", input, kernel, bias, g, {g.cout, g.depth, g.height, g.width});
}

Tensor maxpool2(const Tensor& input) {
  require_rank(input, 3, "maxpool2", "input");
  const std::size_t C = input.dim(0), H = input.dim(1), W = input.dim(2);
  if (H % 2 != 0 || W % 2 != 0) {
    throw ShapeError("maxpool2: extents must be even, got " + shape_str(input.dims()));
  }
  const std::size_t Ho = H / 2, Wo = W / 2;
  Tensor out({C, Ho, Wo});
  std::vector<std::size_t> argmax(C * Ho * Wo);
  auto in = input.values();
  auto o = out.values_mut();
  for (std::size_t c = 0; c < C; ++c) {
    for (std::size_t y = 0; y < Ho; ++y) {
      for (std::size_t x = 0; x < Wo; ++x) {
        const std::size_t base = (c * H + 2 * y) * W + 2 * x;
        const std::size_t window[4] = {base, base + 1, base + W, base + W + 1};
        std::size_t best = window[0];
        for (std::size_t k = 1; k < 4; ++k) {
          if (in[window[k]] > in[best]) best = window[k];
        }
        const std::size_t oi = (c * Ho + y) * Wo + x;
        o[oi] = in[best];
        argmax[oi] = best;
      }
    }
  }
  if (Tape* tape = recording_tape({&input})) {
    out.set_requires_grad(true);
    tape->record("maxpool2", [input, out, argmax = std::move(argmax)]() mutable {
      if (!out.has_grad()) return;
      auto gi = input.grad_mut();
      auto go = out.grad();
      for (std::size_t i = 0; i < go.size(); ++i) gi[argmax[i]] += go[i];
    });
  }
  return out;
}

Tensor bilinear_sample(const Tensor& input, const Tensor& coords) {
  require_rank(input, 3, "bilinear_sample", "input");
  require_rank(coords, 2, "bilinear_sample", "coords");
  if (coords.dim(0) != 2) {
    throw ShapeError("bilinear_sample: coords must be [2,M], got " + shape_str(coords.dims()));
  }
  const std::size_t C = input.dim(0), H = input.dim(1), W = input.dim(2), M = coords.dim(1);
  const double umax = static_cast<double>(W - 1), vmax = static_cast<double>(H - 1);
  Tensor out({C, M});
  auto in = input.values();
  auto cs = coords.values();
  auto o = out.values_mut();
  const std::size_t plane = H * W;
  for (std::size_t m = 0; m < M; ++m) {
    const double u = cs[m], v = cs[M + m];
    if (!(u >= 0.0 && u <= umax && v >= 0.0 && v <= vmax)) continue;
    const auto x0 = static_cast<std::size_t>(u), y0 = static_cast<std::size_t>(v);
    const double fx = u - static_cast<double>(x0), fy = v - static_cast<double>(y0);
    const bool has_x1 = x0 + 1 < W, has_y1 = y0 + 1 < H;
    for (std::size_t c = 0; c < C; ++c) {
      const double* p = in.data() + c * plane + y0 * W + x0;
      const double i00 = p[0];
      const double i01 = has_x1 ? p[1] : 0.0;
      const double i10 = has_y1 ? p[W] : 0.0;
      const double i11 = has_x1 && has_y1 ? p[W + 1] : 0.0;
      o[c * M + m] = (1 - fx) * (1 - fy) * i00 + fx * (1 - fy) * i01 + (1 - fx) * fy * i10 +
                     fx * fy * i11;
    }
  }
  round_to_storage(o);

  if (Tape* tape = recording_tape({&input, &coords})) {
    out.set_requires_grad(true);
    tape->record("bilinear_sample", [input, coords, out, C, H, W, M]() mutable {
      if (!out.has_grad()) return;
      auto go = out.grad();
      auto in = input.values();
      auto cs = coords.values();
      double* gi = input.requires_grad() ? input.grad_mut().data() : nullptr;
      double* gc = coords.requires_grad() ? coords.grad_mut().data() : nullptr;
      const double umax = static_cast<double>(W - 1), vmax = static_cast<double>(H - 1);
      const std::size_t plane = H * W;
      for (std::size_t m = 0; m < M; ++m) {
        const double u = cs[m], v = cs[M + m];
        if (!(u >= 0.0 && u <= umax && v >= 0.0 && v <= vmax)) continue;
        const auto x0 = static_cast<std::size_t>(u), y0 = static_cast<std::size_t>(v);
        const double fx = u - static_cast<double>(x0), fy = v - static_cast<double>(y0);
        const bool has_x1 = x0 + 1 < W, has_y1 = y0 + 1 < H;
        double du = 0.0, dv = 0.0;
        for (std::size_t c = 0; c < C; ++c) {
          const double g = go[c * M + m];
          if (g == 0.0) continue;
          const std::size_t base = c * plane + y0 * W + x0;
          if (gi != nullptr) {
            gi[base] += (1 - fx) * (1 - fy) * g;
            if (has_x1) gi[base + 1] += fx * (1 - fy) * g;
            if (has_y1) gi[base + W] += (1 - fx) * fy * g;
            if (has_x1 && has_y1) gi[base + W + 1] += fx * fy * g;
          }
          if (gc != nullptr) {
            const double i00 = in[base];
            const double i01 = has_x1 ? in[base + 1] : 0.0;
            const double i10 = has_y1 ? in[base + W] : 0.0;
            const double i11 = has_x1 && has_y1 ? in[base + W + 1] : 0.0;
            du += g * ((1 - fy) * (i01 - i00) + fy * (i11 - i10));
            dv += g * ((1 - fx) * (i10 - i00) + fx * (i11 - i01));
          }
        }
        if (gc != nullptr) {
          gc[m] += du;
          gc[M + m] += dv;
        }
      }
    });
  }
  return out;
}

Tensor relu(const Tensor& x) {
  Tensor out(x.dims());
  auto xi = x.values();
  auto o = out.values_mut();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] = xi[i] > 0.0 ? xi[i] : 0.0;
  if (Tape* tape = recording_tape({&x})) {
    out.set_requires_grad(true);
    tape->record("relu", [x, out]() mutable {
      if (!out.has_grad()) return;
      auto gx = x.grad_mut();
      auto go = out.grad();
      auto xv = x.values();
      for (std::size_t i = 0; i < gx.size(); ++i) {
        if (xv[i] > 0.0) gx[i] += go[i];
      }
    });
  }
  return out;
}

Tensor add(const Tensor& a, const Tensor& b) {
  require_same(a, b, "add");
  Tensor out(a.dims());
  auto o = out.values_mut();
  auto av = a.values(), bv = b.values();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] = av[i] + bv[i];
  round_to_storage(o);
  if (Tape* tape = recording_tape({&a, &b})) {
    out.set_requires_grad(true);
    tape->record("add", [a, b, out]() mutable {
      if (!out.has_grad()) return;
      if (a.requires_grad()) add_into(a.grad_mut(), out.grad());
      if (b.requires_grad()) add_into(b.grad_mut(), out.grad());
    });
  }
  return out;
}

Tensor scale(const Tensor& x, double factor) {
  Tensor out(x.dims());
  auto o = out.values_mut();
  auto xv = x.values();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] = xv[i] * factor;
  round_to_storage(o);
  if (Tape* tape = recording_tape({&x})) {
    out.set_requires_grad(true);
    tape->record("scale", [x, out, factor]() mutable {
      if (!out.has_grad()) return;
      auto gx = x.grad_mut();
      auto go = out.grad();
      for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += factor * go[i];
    });
  }
  return out;
}

Tensor concat(const std::vector<Tensor>& parts, std::size_t axis) {
  if (parts.empty()) throw ShapeError("concat: no inputs");
  const Shape& first = parts.front().dims();
  if (axis >= first.size()) throw ShapeError("concat: axis out of range for " + shape_str(first));
  Shape out_dims = first;
  out_dims[axis] = 0;
  for (const Tensor& p : parts) {
    if (p.rank() != first.size()) throw ShapeError("concat: rank mismatch");
    for (std::size_t d = 0; d < first.size(); ++d) {
      if (d != axis && p.dim(d) != first[d]) {
        throw ShapeError("concat: shape mismatch " + shape_str(first) + " vs " +
                         shape_str(p.dims()));
      }
    }
    out_dims[axis] += p.dim(axis);
  }
  const std::size_t outer = shape_numel(Shape(first.begin(), first.begin() + axis));
  const std::size_t inner =
      axis + 1 < first.size() ? shape_numel(Shape(first.begin() + axis + 1, first.end())) : 1;
  const std::size_t out_row = out_dims[axis] * inner;

  Tensor out(out_dims);
  auto o = out.values_mut();
  std::size_t offset = 0;
  std::vector<std::size_t> offsets;
  for (const Tensor& p : parts) {
    offsets.push_back(offset);
    const std::size_t row = p.dim(axis) * inner;
    auto pv = p.values();
    for (std::size_t r = 0; r < outer; ++r) {
      std::copy_n(pv.begin() + r * row, row, o.begin() + r * out_row + offset);
    }
    offset += row;
  }

  bool any = false;
  for (const Tensor& p : parts) any = any || p.requires_grad();
  Tape* tape = active_tape();
  if (tape != nullptr && any) {
    out.set_requires_grad(true);
    tape->record("concat", [parts, out, offsets, outer, inner, out_row, axis]() mutable {
      if (!out.has_grad()) return;
      auto go = out.grad();
      for (std::size_t k = 0; k < parts.size(); ++k) {
        const Tensor& p = parts[k];
        if (!p.requires_grad()) continue;
        const std::size_t row = p.dim(axis) * inner;
        auto gp = p.grad_mut();
        for (std::size_t r = 0; r < outer; ++r) {
          for (std::size_t i = 0; i < row; ++i) gp[r * row + i] += go[r * out_row + offsets[k] + i];
        }
      }
    });
  }
  return out;
}

Tensor reshape(const Tensor& x, Shape dims) {
  if (shape_numel(dims) != x.numel()) {
    throw ShapeError("reshape: " + shape_str(x.dims()) + " -> " + shape_str(dims));
  }
  Tensor out(std::move(dims), std::vector<double>(x.values().begin(), x.values().end()));
  if (Tape* tape = recording_tape({&x})) {
    out.set_requires_grad(true);
    tape->record("reshape", [x, out]() mutable {
      if (!out.has_grad()) return;
      add_into(x.grad_mut(), out.grad());
    });
  }
  return out;
}

Tensor sum(const Tensor& x) {
  auto xv = x.values();
  Tensor out = Tensor::scalar(std::accumulate(xv.begin(), xv.end(), 0.0));
  round_to_storage(out.values_mut());
  if (Tape* tape = recording_tape({&x})) {
    out.set_requires_grad(true);
    tape->record("sum", [x, out]() mutable {
      if (!out.has_grad()) return;
      const double g = out.grad()[0];
      for (double& v : x.grad_mut()) v += g;
    });
  }
  return out;
}

Tensor mse(const Tensor& pred, const Tensor& target) {
  require_same(pred, target, "mse");
  auto p = pred.values(), t = target.values();
  double acc = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double d = p[i] - t[i];
    acc += d * d;
  }
  const double n = static_cast<double>(p.size());
  Tensor out = Tensor::scalar(acc / n);
  round_to_storage(out.values_mut());
  if (Tape* tape = recording_tape({&pred, &target})) {
    out.set_requires_grad(true);
    tape->record("mse", [pred, target, out, n]() mutable {
      if (!out.has_grad()) return;
      const double g = 2.0 * out.grad()[0] / n;
      auto p = pred.values(), t = target.values();
      if (pred.requires_grad()) {
        auto gp = pred.grad_mut();
        for (std::size_t i = 0; i < gp.size(); ++i) gp[i] += g * (p[i] - t[i]);
      }
      if (target.requires_grad()) {
        auto gt = target.grad_mut();
        for (std::size_t i = 0; i < gt.size(); ++i) gt[i] -= g * (p[i] - t[i]);
      }
    });
  }
  return out;
}

}  // namespace mvc3d::ops
