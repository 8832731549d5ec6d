#pragma once

#include <string>
#include <vector>

#include "gemm.hpp"
#include "tensor.hpp"

namespace lapseg {

// Geometry of one (transpose-)convolution. Weight layouts:
//   conv2d:           weight (out, in, kh, kw), bias (1, out, 1, 1)
//   conv_transpose2d: weight (in, out, kh, kw), bias (1, out, 1, 1)
// The transpose layout puts the contraction axis first so that the two ops
// are exact adjoints of one another for a shared weight tensor:
//   <conv2d(x, w), y> == <x, conv_transpose2d(y, w)>.
struct ConvGeom {
  int64_t in_channels = 0;
  int64_t out_channels = 0;
  int64_t kh = 4;
  int64_t kw = 4;
  int64_t stride = 1;
  int64_t padding = 0;
};

inline int64_t conv_out_dim(int64_t in, int64_t k, int64_t stride, int64_t padding) {
  const int64_t span = in + 2 * padding - k;
  // Integer division truncates toward zero; a kernel wider than the padded
  // input must surface as a non-positive dim so validation rejects it.
  if (span < 0) return 0;
  return span / stride + 1;
}

inline int64_t conv_transpose_out_dim(int64_t in, int64_t k, int64_t stride, int64_t padding) {
  return (in - 1) * stride - 2 * padding + k;
}

namespace detail {

// Gathers conv patches of img (c, h, w) into col[(c*kh*kw) x (oh*ow)].
template <typename T>
void im2col(const T* img, int64_t c, int64_t h, int64_t w, const ConvGeom& g, int64_t oh,
            int64_t ow, T* col) {
  const int64_t P = oh * ow;
  for (int64_t i = 0; i < c; ++i) {
    for (int64_t a = 0; a < g.kh; ++a) {
      for (int64_t b = 0; b < g.kw; ++b) {
        T* crow = col + ((i * g.kh + a) * g.kw + b) * P;
        for (int64_t p = 0; p < oh; ++p) {
          int64_t ih = p * g.stride - g.padding + a;
          if (ih < 0 || ih >= h) {
            for (int64_t q = 0; q < ow; ++q) crow[p * ow + q] = T(0);
            continue;
          }
          const T* irow = img + (i * h + ih) * w;
          for (int64_t q = 0; q < ow; ++q) {
            int64_t iw = q * g.stride - g.padding + b;
            crow[p * ow + q] = (iw >= 0 && iw < w) ? irow[iw] : T(0);
          }
        }
      }
    }
  }
}

// Scatter-adds col[(c*kh*kw) x (oh*ow)] back into img (c, h, w).
template <typename T>
void col2im(const T* col, int64_t c, int64_t h, int64_t w, const ConvGeom& g, int64_t oh,
            int64_t ow, T* img) {
  const int64_t P = oh * ow;
  for (int64_t i = 0; i < c; ++i) {
    for (int64_t a = 0; a < g.kh; ++a) {
      for (int64_t b = 0; b < g.kw; ++b) {
        const T* crow = col + ((i * g.kh + a) * g.kw + b) * P;
        for (int64_t p = 0; p < oh; ++p) {
          int64_t ih = p * g.stride - g.padding + a;
          if (ih < 0 || ih >= h) continue;
          T* irow = img + (i * h + ih) * w;
          for (int64_t q = 0; q < ow; ++q) {
            int64_t iw = q * g.stride - g.padding + b;
            if (iw >= 0 && iw < w) irow[iw] += crow[p * ow + q];
          }
        }
      }
    }
  }
}

template <typename T>
void check_conv_args(const Tensor<T>& x, const Tensor<T>& weight, const Tensor<T>& bias,
                     const ConvGeom& g, bool transpose, const std::string& who) {
  const Shape& xs = x.shape();
  const Shape& ws = weight.shape();
  if (xs.c != g.in_channels) {
    throw ShapeError(who + ": input has " + std::to_string(xs.c) + " channels, layer expects " +
                     std::to_string(g.in_channels));
  }
  Shape expect_w = transpose ? Shape{g.in_channels, g.out_channels, g.kh, g.kw}
                             : Shape{g.out_channels, g.in_channels, g.kh, g.kw};
  if (!(ws == expect_w)) {
    throw ShapeError(who + ": weight shape " + ws.str() + ", expected " + expect_w.str());
  }
  Shape expect_b{1, g.out_channels, 1, 1};
  if (!(bias.shape() == expect_b)) {
    throw ShapeError(who + ": bias shape " + bias.shape().str() + ", expected " + expect_b.str());
  }
  int64_t oh = transpose ? conv_transpose_out_dim(xs.h, g.kh, g.stride, g.padding)
                         : conv_out_dim(xs.h, g.kh, g.stride, g.padding);
  int64_t ow = transpose ? conv_transpose_out_dim(xs.w, g.kw, g.stride, g.padding)
                         : conv_out_dim(xs.w, g.kw, g.stride, g.padding);
  if (oh < 1 || ow < 1) {
    throw ShapeError(who + ": output dims " + std::to_string(oh) + "x" + std::to_string(ow) +
                     " for input " + xs.str());
  }
}

template <typename T>
void add_bias(T* out, const T* bias, int64_t channels, int64_t spatial) {
  for (int64_t c = 0; c < channels; ++c) {
    T b = bias[c];
    T* row = out + c * spatial;
    for (int64_t p = 0; p < spatial; ++p) row[p] += b;
  }
}

// Reference implementation: direct summation, no re-association. Unit tests
// hold the optimized path to this one.
template <typename T>
Tensor<T> conv2d_direct(const Tensor<T>& x, const Tensor<T>& weight, const Tensor<T>& bias,
                        const ConvGeom& g) {
  const Shape& xs = x.shape();
  int64_t oh = conv_out_dim(xs.h, g.kh, g.stride, g.padding);
  int64_t ow = conv_out_dim(xs.w, g.kw, g.stride, g.padding);
  auto out = Tensor<T>::zeros({xs.n, g.out_channels, oh, ow});
  for (int64_t n = 0; n < xs.n; ++n)
    for (int64_t o = 0; o < g.out_channels; ++o)
      for (int64_t p = 0; p < oh; ++p)
        for (int64_t q = 0; q < ow; ++q) {
          T acc = bias.data()[o];
          for (int64_t i = 0; i < g.in_channels; ++i)
            for (int64_t a = 0; a < g.kh; ++a)
              for (int64_t b = 0; b < g.kw; ++b) {
                int64_t ih = p * g.stride - g.padding + a;
                int64_t iw = q * g.stride - g.padding + b;
                if (ih < 0 || ih >= xs.h || iw < 0 || iw >= xs.w) continue;
                acc += x.data()[xs.index(n, i, ih, iw)] *
                       weight.data()[weight.shape().index(o, i, a, b)];
              }
          out.data()[out.shape().index(n, o, p, q)] = acc;
        }
  return out;
}

template <typename T>
Tensor<T> conv_transpose2d_direct(const Tensor<T>& x, const Tensor<T>& weight,
                                  const Tensor<T>& bias, const ConvGeom& g) {
  const Shape& xs = x.shape();
  int64_t oh = conv_transpose_out_dim(xs.h, g.kh, g.stride, g.padding);
  int64_t ow = conv_transpose_out_dim(xs.w, g.kw, g.stride, g.padding);
  auto out = Tensor<T>::zeros({xs.n, g.out_channels, oh, ow});
  for (int64_t n = 0; n < xs.n; ++n) {
    for (int64_t j = 0; j < g.out_channels; ++j) {
      T* oimg = out.data() + (n * g.out_channels + j) * oh * ow;
      for (int64_t p = 0; p < ow * oh; ++p) oimg[p] = bias.data()[j];
    }
    for (int64_t i = 0; i < g.in_channels; ++i)
      for (int64_t p = 0; p < xs.h; ++p)
        for (int64_t q = 0; q < xs.w; ++q) {
          T v = x.data()[xs.index(n, i, p, q)];
          if (v == T(0)) continue;
          for (int64_t j = 0; j < g.out_channels; ++j)
            for (int64_t a = 0; a < g.kh; ++a)
              for (int64_t b = 0; b < g.kw; ++b) {
                int64_t rh = p * g.stride - g.padding + a;
                int64_t rw = q * g.stride - g.padding + b;
                if (rh < 0 || rh >= oh || rw < 0 || rw >= ow) continue;
                out.data()[out.shape().index(n, j, rh, rw)] +=
                    v * weight.data()[weight.shape().index(i, j, a, b)];
              }
        }
  }
  return out;
}

}  // namespace detail

// Strided cross-correlation. Optimized im2col+GEMM path; bit-level agreement
// with detail::conv2d_direct is not promised, tests bound the drift at 1e-6.
template <typename T>
Tensor<T> conv2d(const Tensor<T>& x, const Tensor<T>& weight, const Tensor<T>& bias,
                 const ConvGeom& g, TapeOf<T>* tape, const std::string& who = "conv2d") {
  detail::check_conv_args(x, weight, bias, g, false, who);
  const Shape& xs = x.shape();
  const int64_t oh = conv_out_dim(xs.h, g.kh, g.stride, g.padding);
  const int64_t ow = conv_out_dim(xs.w, g.kw, g.stride, g.padding);
  const int64_t K = g.in_channels * g.kh * g.kw;
  const int64_t P = oh * ow;
  auto out = Tensor<T>::zeros({xs.n, g.out_channels, oh, ow});

  std::vector<T> col(static_cast<size_t>(K * P));
  for (int64_t n = 0; n < xs.n; ++n) {
    detail::im2col(x.data() + n * xs.c * xs.h * xs.w, xs.c, xs.h, xs.w, g, oh, ow, col.data());
    T* on = out.data() + n * g.out_channels * P;
    gemm_nn(weight.data(), col.data(), on, g.out_channels, K, P);
    detail::add_bias(on, bias.data(), g.out_channels, P);
  }

  if (detail::track(tape, {x.requires_grad(), weight.requires_grad(), bias.requires_grad()})) {
    out.set_requires_grad(true);
    Tensor<T> cx = x, cw = weight, cb = bias, co = out;
    tape->record([cx, cw, cb, co, g, oh, ow, K, P]() mutable {
      if (co.grad_view().empty()) return;
      const Shape& xs = cx.shape();
      const T* up = co.grad_view().data();
      std::vector<T> col(static_cast<size_t>(K * P));
      std::vector<T> gcol;
      for (int64_t n = 0; n < xs.n; ++n) {
        const T* upn = up + n * g.out_channels * P;
        if (cb.requires_grad()) {
          auto& gb = cb.grad();
          for (int64_t o = 0; o < g.out_channels; ++o) {
            T acc = 0;
            const T* row = upn + o * P;
            for (int64_t p = 0; p < P; ++p) acc += row[p];
            gb[o] += acc;
          }
        }
        if (cw.requires_grad() || cx.requires_grad()) {
          if (cw.requires_grad()) {
            detail::im2col(cx.data() + n * xs.c * xs.h * xs.w, xs.c, xs.h, xs.w, g, oh, ow,
                           col.data());
            gemm_nt(upn, col.data(), cw.grad().data(), g.out_channels, P, K);
          }
          if (cx.requires_grad()) {
            gcol.assign(static_cast<size_t>(K * P), T(0));
            gemm_tn(cw.data(), upn, gcol.data(), g.out_channels, K, P);
            detail::col2im(gcol.data(), xs.c, xs.h, xs.w, g, oh, ow,
                           cx.grad().data() + n * xs.c * xs.h * xs.w);
          }
        }
      }
    });
  }
  return out;
}

// Fractionally-strided convolution: the adjoint of conv2d for the same
// weight tensor, with its own independent parameters when used as a layer.
template <typename T>
Tensor<T> conv_transpose2d(const Tensor<T>& x, const Tensor<T>& weight, const Tensor<T>& bias,
                           const ConvGeom& g, TapeOf<T>* tape,
                           const std::string& who = "conv_transpose2d") {
  detail::check_conv_args(x, weight, bias, g, true, who);
  const Shape& xs = x.shape();
  const int64_t oh = conv_transpose_out_dim(xs.h, g.kh, g.stride, g.padding);
  const int64_t ow = conv_transpose_out_dim(xs.w, g.kw, g.stride, g.padding);
  const int64_t K2 = g.out_channels * g.kh * g.kw;
  const int64_t Pin = xs.h * xs.w;
  auto out = Tensor<T>::zeros({xs.n, g.out_channels, oh, ow});

  // Output-side geometry: patches of the output grid indexed by input pixels.
  ConvGeom og = g;
  og.in_channels = g.out_channels;

  std::vector<T> col(static_cast<size_t>(K2 * Pin));
  for (int64_t n = 0; n < xs.n; ++n) {
    std::fill(col.begin(), col.end(), T(0));
    // col[(j,a,b), (p,q)] = sum_i x[n,i,p,q] * w[i,(j,a,b)]
    gemm_tn(weight.data(), x.data() + n * xs.c * Pin, col.data(), g.in_channels, K2, Pin);
    T* on = out.data() + n * g.out_channels * oh * ow;
    detail::col2im(col.data(), g.out_channels, oh, ow, og, xs.h, xs.w, on);
    detail::add_bias(on, bias.data(), g.out_channels, oh * ow);
  }

  if (detail::track(tape, {x.requires_grad(), weight.requires_grad(), bias.requires_grad()})) {
    out.set_requires_grad(true);
    Tensor<T> cx = x, cw = weight, cb = bias, co = out;
    tape->record([cx, cw, cb, co, g, og, oh, ow, K2, Pin]() mutable {
      if (co.grad_view().empty()) return;
      const Shape& xs = cx.shape();
      const T* up = co.grad_view().data();
      const int64_t Pout = oh * ow;
      std::vector<T> col(static_cast<size_t>(K2 * Pin));
      for (int64_t n = 0; n < xs.n; ++n) {
        const T* upn = up + n * g.out_channels * Pout;
        if (cb.requires_grad()) {
          auto& gb = cb.grad();
          for (int64_t j = 0; j < g.out_channels; ++j) {
            T acc = 0;
            const T* row = upn + j * Pout;
            for (int64_t p = 0; p < Pout; ++p) acc += row[p];
            gb[j] += acc;
          }
        }
        if (cw.requires_grad() || cx.requires_grad()) {
          // Patches of the upstream gradient, gathered on the output grid.
          detail::im2col(upn, g.out_channels, oh, ow, og, xs.h, xs.w, col.data());
          if (cx.requires_grad()) {
            gemm_nn(cw.data(), col.data(), cx.grad().data() + n * xs.c * Pin, g.in_channels, K2,
                    Pin);
          }
          if (cw.requires_grad()) {
            gemm_nt(cx.data() + n * xs.c * Pin, col.data(), cw.grad().data(), g.in_channels, Pin,
                    K2);
          }
        }
      }
    });
  }
  return out;
}

}  // namespace lapseg
