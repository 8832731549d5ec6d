#pragma once

#include <cmath>

#include "tensor.hpp"

namespace lapseg {

template <typename T>
Tensor<T> relu(const Tensor<T>& x, TapeOf<T>* tape) {
  auto out = Tensor<T>::zeros(x.shape());
  const T* px = x.data();
  T* po = out.data();
  for (int64_t i = 0; i < x.size(); ++i) po[i] = px[i] > T(0) ? px[i] : T(0);
  if (detail::track(tape, {x.requires_grad()})) {
    out.set_requires_grad(true);
    Tensor<T> cx = x, co = out;
    tape->record([cx, co]() mutable {
      const auto& up = co.grad_view();
      if (up.empty()) return;
      auto& g = cx.grad();
      const T* px = cx.data();
      for (size_t i = 0; i < g.size(); ++i)
        if (px[i] > T(0)) g[i] += up[i];
    });
  }
  return out;
}

template <typename T>
Tensor<T> sigmoid(const Tensor<T>& x, TapeOf<T>* tape) {
  auto out = Tensor<T>::zeros(x.shape());
  const T* px = x.data();
  T* po = out.data();
  for (int64_t i = 0; i < x.size(); ++i) po[i] = T(1) / (T(1) + std::exp(-px[i]));
  if (detail::track(tape, {x.requires_grad()})) {
    out.set_requires_grad(true);
    Tensor<T> cx = x, co = out;
    tape->record([cx, co]() mutable {
      const auto& up = co.grad_view();
      if (up.empty()) return;
      auto& g = cx.grad();
      const T* s = co.data();
      for (size_t i = 0; i < g.size(); ++i) g[i] += up[i] * s[i] * (T(1) - s[i]);
    });
  }
  return out;
}

// Softmax across the channel axis, independently per (n, h, w) site.
// Max-subtracted for stability; outputs sum to 1 along c.
template <typename T>
Tensor<T> softmax_channels(const Tensor<T>& x, TapeOf<T>* tape) {
  const Shape& s = x.shape();
  auto out = Tensor<T>::zeros(s);
  const T* px = x.data();
  T* po = out.data();
  const int64_t sp = s.h * s.w;
  const int64_t cs = s.c * sp;
  for (int64_t n = 0; n < s.n; ++n) {
    const T* xn = px + n * cs;
    T* on = po + n * cs;
    for (int64_t p = 0; p < sp; ++p) {
      T mx = xn[p];
      for (int64_t c = 1; c < s.c; ++c) mx = std::max(mx, xn[c * sp + p]);
      T z = 0;
      for (int64_t c = 0; c < s.c; ++c) {
        T e = std::exp(xn[c * sp + p] - mx);
        on[c * sp + p] = e;
        z += e;
      }
      T inv = T(1) / z;
      for (int64_t c = 0; c < s.c; ++c) on[c * sp + p] *= inv;
    }
  }
  if (detail::track(tape, {x.requires_grad()})) {
    out.set_requires_grad(true);
    Tensor<T> cx = x, co = out;
    tape->record([cx, co, sp, cs]() mutable {
      const auto& up = co.grad_view();
      if (up.empty()) return;
      const Shape& s = cx.shape();
      auto& g = cx.grad();
      const T* y = co.data();
      // dx_c = y_c * (dy_c - sum_k y_k dy_k), per site
      for (int64_t n = 0; n < s.n; ++n) {
        const int64_t base = n * cs;
        for (int64_t p = 0; p < sp; ++p) {
          T dot = 0;
          for (int64_t c = 0; c < s.c; ++c) {
            int64_t i = base + c * sp + p;
            dot += y[i] * up[i];
          }
          for (int64_t c = 0; c < s.c; ++c) {
            int64_t i = base + c * sp + p;
            g[i] += y[i] * (up[i] - dot);
          }
        }
      }
    });
  }
  return out;
}

}  // namespace lapseg
