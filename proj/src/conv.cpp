// Convolutions as im2col + GEMM. For output slice d only the kernel depth
// taps that land inside the input take part, so the z-padding of the 3D
// fusion layers costs no multiply-adds.

#include <algorithm>
#include <vector>

#include <Eigen/Core>

#include "conv_kernels.hpp"
#include "mvc3d/tensor.hpp"

namespace mvc3d::detail {

namespace {

template <class S>
using RowMat = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct SliceTaps {
  std::size_t lo, hi;
};

SliceTaps valid_taps(const ConvGeometry& g, std::size_t d) {
  const std::size_t pad = g.kd / 2;
  const std::size_t lo = pad > d ? pad - d : 0;
  const std::size_t hi = std::min(g.kd, g.depth + pad - d);
  return {lo, hi};
}

// [co][ci][kd][kh][kw] -> [co][kd][ci][kh][kw] so each depth tap is a
// contiguous column block.
template <class S>
std::vector<S> reorder_kernel(const ConvGeometry& g, const double* k) {
  const std::size_t khw = g.kh * g.kw;
  std::vector<S> out(g.cout * g.kd * g.cin * khw);
  for (std::size_t co = 0; co < g.cout; ++co)
    for (std::size_t ci = 0; ci < g.cin; ++ci)
      for (std::size_t z = 0; z < g.kd; ++z)
        for (std::size_t j = 0; j < khw; ++j)
          out[((co * g.kd + z) * g.cin + ci) * khw + j] =
              static_cast<S>(k[((co * g.cin + ci) * g.kd + z) * khw + j]);
  return out;
}

struct RowSpan {
  long lo, hi;
};

// Output columns x whose source column x + kx - pad lies in [0, width).
RowSpan valid_cols(long width, long kx, long pad) {
  return {std::max(0L, pad - kx), std::min(width, width + pad - kx)};
}

// 2D im2col of every input depth slice: col is [depth][cin*kh*kw][hw], so
// the rows used by consecutive depth taps are contiguous.
template <class S>
void im2col_volume(const ConvGeometry& g, const double* in, S* col) {
  const long H = static_cast<long>(g.height), W = static_cast<long>(g.width);
  const std::size_t hw = g.height * g.width;
  const long ph = static_cast<long>(g.kh / 2), pw = static_cast<long>(g.kw / 2);
  std::size_t row = 0;
  for (std::size_t z = 0; z < g.depth; ++z) {
    for (std::size_t ci = 0; ci < g.cin; ++ci) {
      const double* plane = in + (ci * g.depth + z) * hw;
      for (long ky = 0; ky < static_cast<long>(g.kh); ++ky) {
        for (long kx = 0; kx < static_cast<long>(g.kw); ++kx, ++row) {
          S* dst = col + row * hw;
          const RowSpan xs = valid_cols(W, kx, pw);
          const long shift = kx - pw;
          for (long y = 0; y < H; ++y) {
            S* drow = dst + y * W;
            const long sy = y + ky - ph;
            if (sy < 0 || sy >= H || xs.lo >= xs.hi) {
              std::fill(drow, drow + W, S{0});
              continue;
            }
            const double* srow = plane + sy * W;
            std::fill(drow, drow + xs.lo, S{0});
            for (long x = xs.lo; x < xs.hi; ++x) drow[x] = static_cast<S>(srow[x + shift]);
            std::fill(drow + xs.hi, drow + W, S{0});
          }
        }
      }
    }
  }
}

// Adds one depth slice of column gradients [cin*kh*kw][hw] into gin.
template <class S>
void col2im_slice(const ConvGeometry& g, const S* col, std::size_t z, double* gin) {
  const long H = static_cast<long>(g.height), W = static_cast<long>(g.width);
  const std::size_t hw = g.height * g.width;
  const long ph = static_cast<long>(g.kh / 2), pw = static_cast<long>(g.kw / 2);
  std::size_t row = 0;
  for (std::size_t ci = 0; ci < g.cin; ++ci) {
    double* plane = gin + (ci * g.depth + z) * hw;
    for (long ky = 0; ky < static_cast<long>(g.kh); ++ky) {
      for (long kx = 0; kx < static_cast<long>(g.kw); ++kx, ++row) {
        const S* src = col + row * hw;
        const RowSpan xs = valid_cols(W, kx, pw);
        const long shift = kx - pw;
        for (long y = 0; y < H; ++y) {
          const long sy = y + ky - ph;
          if (sy < 0 || sy >= H) continue;
          double* drow = plane + sy * W;
          const S* srow = src + y * W;
          for (long x = xs.lo; x < xs.hi; ++x) drow[x + shift] += static_cast<double>(srow[x]);
        }
      }
    }
  }
}

template <class S>
void forward_impl(const ConvGeometry& g, const double* in, const double* k, const double* bias,
                  double* out) {
  const std::size_t hw = g.height * g.width;
  const std::size_t slab = g.cin * g.kh * g.kw;
  const std::size_t pd = g.kd / 2;
  const std::vector<S> wr = reorder_kernel<S>(g, k);
  Eigen::Map<const RowMat<S>> weights(wr.data(), g.cout, g.kd * slab);
  std::vector<S> col(g.depth * slab * hw);
  im2col_volume(g, in, col.data());
  Eigen::Map<const RowMat<S>> cols(col.data(), g.depth * slab, hw);
  RowMat<S> res(g.cout, hw);
  for (std::size_t d = 0; d < g.depth; ++d) {
    const SliceTaps taps = valid_taps(g, d);
    const std::size_t rows = (taps.hi - taps.lo) * slab;
    res.noalias() = weights.middleCols(taps.lo * slab, rows) * cols.middleRows((d + taps.lo - pd) * slab, rows);
    for (std::size_t co = 0; co < g.cout; ++co) {
      double* dst = out + (co * g.depth + d) * hw;
      const S* src = res.data() + co * hw;
      for (std::size_t i = 0; i < hw; ++i) dst[i] = static_cast<double>(src[i]) + bias[co];
    }
  }
}

template <class S>
void backward_impl(const ConvGeometry& g, const double* in, const double* k, const double* gout,
                   double* gin, double* gk, double* gb) {
  const std::size_t hw = g.height * g.width;
  if (gb != nullptr) {
    for (std::size_t co = 0; co < g.cout; ++co) {
      const double* src = gout + co * g.depth * hw;
      double acc = 0.0;
      for (std::size_t i = 0; i < g.depth * hw; ++i) acc += src[i];
      gb[co] += acc;
    }
  }
  if (gin == nullptr && gk == nullptr) return;

  const std::size_t khw = g.kh * g.kw;
  const std::size_t slab = g.cin * khw;
  const std::size_t pd = g.kd / 2;

  // Output gradient as [depth][cout][hw].
  std::vector<S> go(g.depth * g.cout * hw);
  for (std::size_t co = 0; co < g.cout; ++co)
    for (std::size_t d = 0; d < g.depth; ++d) {
      const double* src = gout + (co * g.depth + d) * hw;
      S* dst = go.data() + (d * g.cout + co) * hw;
      for (std::size_t i = 0; i < hw; ++i) dst[i] = static_cast<S>(src[i]);
    }
  Eigen::Map<const RowMat<S>> gos(go.data(), g.depth * g.cout, hw);

  if (gk != nullptr) {
    std::vector<S> col(g.depth * slab * hw);
    im2col_volume(g, in, col.data());
    Eigen::Map<const RowMat<S>> cols(col.data(), g.depth * slab, hw);
    RowMat<S> gw = RowMat<S>::Zero(g.cout, g.kd * slab);
    for (std::size_t d = 0; d < g.depth; ++d) {
      const SliceTaps taps = valid_taps(g, d);
      const std::size_t rows = (taps.hi - taps.lo) * slab;
      gw.middleCols(taps.lo * slab, rows).noalias() +=
          gos.middleRows(d * g.cout, g.cout) * cols.middleRows((d + taps.lo - pd) * slab, rows).transpose();
    }
    for (std::size_t co = 0; co < g.cout; ++co)
      for (std::size_t ci = 0; ci < g.cin; ++ci)
        for (std::size_t z = 0; z < g.kd; ++z)
          for (std::size_t j = 0; j < khw; ++j)
            gk[((co * g.cin + ci) * g.kd + z) * khw + j] +=
                static_cast<double>(gw(co, (z * g.cin + ci) * khw + j));
  }

  if (gin != nullptr) {
    // wt column block j holds the transposed kernel of depth tap kd-1-j, so
    // for input slice z the contributing output slices z-pd+j are contiguous.
    RowMat<S> wt(slab, g.kd * g.cout);
    for (std::size_t co = 0; co < g.cout; ++co)
      for (std::size_t ci = 0; ci < g.cin; ++ci)
        for (std::size_t z = 0; z < g.kd; ++z)
          for (std::size_t j = 0; j < khw; ++j)
            wt(ci * khw + j, (g.kd - 1 - z) * g.cout + co) =
                static_cast<S>(k[((co * g.cin + ci) * g.kd + z) * khw + j]);
    RowMat<S> gcol(slab, hw);
    for (std::size_t z = 0; z < g.depth; ++z) {
      const SliceTaps js = valid_taps(g, z);
      const std::size_t m = (js.hi - js.lo) * g.cout;
      gcol.noalias() = wt.middleCols(js.lo * g.cout, m) * gos.middleRows((z + js.lo - pd) * g.cout, m);
      col2im_slice(g, gcol.data(), z, gin);
    }
  }
}

}  // namespace

void conv_forward(const ConvGeometry& g, const double* input, const double* kernel,
                  const double* bias, double* output) {
  if (precision() == Precision::Single) {
    forward_impl<float>(g, input, kernel, bias, output);
  } else {
    forward_impl<double>(g, input, kernel, bias, output);
  }
}

void conv_backward(const ConvGeometry& g, const double* input, const double* kernel,
                   const double* grad_output, double* grad_input, double* grad_kernel,
                   double* grad_bias) {
  if (precision() == Precision::Single) {
    backward_impl<float>(g, input, kernel, grad_output, grad_input, grad_kernel, grad_bias);
  } else {
    backward_impl<double>(g, input, kernel, grad_output, grad_input, grad_kernel, grad_bias);
  }
}

}  // namespace mvc3d::detail
