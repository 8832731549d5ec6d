#pragma once

#include <algorithm>
#include <cmath>
#include <memory>
#include <string>
#include <vector>

#include "tensor.hpp"

namespace lapseg {

namespace detail {

// Targets for dice / cross-entropy must be exactly one-hot along c.
template <typename T>
void check_one_hot(const Tensor<T>& target, const std::string& who) {
  const Shape& s = target.shape();
  const T* pt = target.data();
  const int64_t sp = s.h * s.w;
  for (int64_t n = 0; n < s.n; ++n) {
    for (int64_t p = 0; p < sp; ++p) {
      T acc = 0;
      for (int64_t c = 0; c < s.c; ++c) {
        T v = pt[(n * s.c + c) * sp + p];
        if (v != T(0) && v != T(1)) {
          throw ContractError(who + ": target entry " + std::to_string(static_cast<double>(v)) +
                              " is not 0 or 1");
        }
        acc += v;
      }
      if (acc != T(1)) {
        throw ContractError(who + ": target channel sum at pixel " + std::to_string(p) +
                            " of sample " + std::to_string(n) + " is " +
                            std::to_string(static_cast<double>(acc)) + ", expected exactly 1");
      }
    }
  }
}

template <typename T>
void check_same_shape(const Tensor<T>& a, const Tensor<T>& b, const std::string& who) {
  if (!(a.shape() == b.shape())) {
    throw ShapeError(who + ": prediction " + a.shape().str() + " vs target " + b.shape().str());
  }
}

}  // namespace detail

// Mean squared error over every element.
template <typename T>
Tensor<T> mse_loss(const Tensor<T>& pred, const Tensor<T>& target, TapeOf<T>* tape) {
  detail::check_same_shape(pred, target, "mse_loss");
  const int64_t n = pred.size();
  if (n == 0) throw ShapeError("mse_loss: empty tensors");
  const T* pp = pred.data();
  const T* pt = target.data();
  T acc = 0;
  for (int64_t i = 0; i < n; ++i) {
    T d = pp[i] - pt[i];
    acc += d * d;
  }
  auto out = Tensor<T>::full({1, 1, 1, 1}, acc / static_cast<T>(n));
  if (detail::track(tape, {pred.requires_grad(), target.requires_grad()})) {
    out.set_requires_grad(true);
    Tensor<T> cp = pred, ct = target, co = out;
    tape->record([cp, ct, co, n]() mutable {
      const auto& upv = co.grad_view();
      if (upv.empty()) return;
      T up = upv[0] * T(2) / static_cast<T>(n);
      const T* pp = cp.data();
      const T* pt = ct.data();
      if (cp.requires_grad()) {
        auto& g = cp.grad();
        for (int64_t i = 0; i < n; ++i) g[i] += up * (pp[i] - pt[i]);
      }
      if (ct.requires_grad()) {
        auto& g = ct.grad();
        for (int64_t i = 0; i < n; ++i) g[i] -= up * (pp[i] - pt[i]);
      }
    });
  }
  return out;
}

// Multi-class soft dice with squared-denominator overlap, pooled over the
// whole batch per class:
//   DSC_c = (2 * sum(p*g) + eps) / (sum(p^2) + sum(g^2) + eps)
//   loss  = 1 - mean_c DSC_c
// The class mean is summed over DSC values sorted descending, which makes the
// loss bit-identical under any permutation of the class axis.
template <typename T>
Tensor<T> dice_loss(const Tensor<T>& pred, const Tensor<T>& target, TapeOf<T>* tape,
                    T eps = static_cast<T>(1e-6)) {
  detail::check_same_shape(pred, target, "dice_loss");
  detail::check_one_hot(target, "dice_loss");
  const Shape& s = pred.shape();
  const int64_t sp = s.h * s.w;
  const T* pp = pred.data();
  const T* pt = target.data();

  auto inter = std::make_shared<std::vector<T>>(static_cast<size_t>(s.c), T(0));
  auto denom = std::make_shared<std::vector<T>>(static_cast<size_t>(s.c), T(0));
  for (int64_t c = 0; c < s.c; ++c) {
    T a = 0, b = 0;
    for (int64_t n = 0; n < s.n; ++n) {
      const T* prow = pp + (n * s.c + c) * sp;
      const T* trow = pt + (n * s.c + c) * sp;
      for (int64_t q = 0; q < sp; ++q) {
        a += prow[q] * trow[q];
        b += prow[q] * prow[q] + trow[q] * trow[q];
      }
    }
    (*inter)[c] = a;
    (*denom)[c] = b;
  }

  std::vector<T> dsc(static_cast<size_t>(s.c));
  for (int64_t c = 0; c < s.c; ++c)
    dsc[c] = (T(2) * (*inter)[c] + eps) / ((*denom)[c] + eps);
  std::sort(dsc.begin(), dsc.end(), std::greater<T>());
  T acc = 0;
  for (T v : dsc) acc += v;
  auto out = Tensor<T>::full({1, 1, 1, 1}, T(1) - acc / static_cast<T>(s.c));

  if (detail::track(tape, {pred.requires_grad()})) {
    out.set_requires_grad(true);
    Tensor<T> cp = pred, ct = target, co = out;
    tape->record([cp, ct, co, inter, denom, eps, sp]() mutable {
      const auto& upv = co.grad_view();
      if (upv.empty()) return;
      const Shape& s = cp.shape();
      T up = upv[0];
      auto& g = cp.grad();
      const T* pp = cp.data();
      const T* pt = ct.data();
      for (int64_t c = 0; c < s.c; ++c) {
        T num = T(2) * (*inter)[c] + eps;
        T den = (*denom)[c] + eps;
        // d(1 - mean)/dDSC_c = -1/C; dDSC_c/dp = (2g*den - num*2p) / den^2
        T k = -up / static_cast<T>(s.c) / (den * den);
        for (int64_t n = 0; n < s.n; ++n) {
          int64_t base = (n * s.c + c) * sp;
          for (int64_t q = 0; q < sp; ++q)
            g[base + q] += k * (T(2) * pt[base + q] * den - num * T(2) * pp[base + q]);
        }
      }
    });
  }
  return out;
}

// Cross-entropy over per-pixel class probabilities and a one-hot target,
// averaged over pixels. Probabilities are clamped at 1e-12 inside the log.
template <typename T>
Tensor<T> cross_entropy_loss(const Tensor<T>& pred, const Tensor<T>& target, TapeOf<T>* tape) {
  detail::check_same_shape(pred, target, "cross_entropy_loss");
  detail::check_one_hot(target, "cross_entropy_loss");
  const Shape& s = pred.shape();
  const int64_t sp = s.h * s.w;
  const int64_t pixels = s.n * sp;
  const T clamp = static_cast<T>(1e-12);
  const T* pp = pred.data();
  const T* pt = target.data();
  T acc = 0;
  for (int64_t n = 0; n < s.n; ++n)
    for (int64_t c = 0; c < s.c; ++c) {
      int64_t base = (n * s.c + c) * sp;
      for (int64_t q = 0; q < sp; ++q)
        if (pt[base + q] == T(1)) acc -= std::log(std::max(pp[base + q], clamp));
    }
  auto out = Tensor<T>::full({1, 1, 1, 1}, acc / static_cast<T>(pixels));

  if (detail::track(tape, {pred.requires_grad()})) {
    out.set_requires_grad(true);
    Tensor<T> cp = pred, ct = target, co = out;
    tape->record([cp, ct, co, sp, pixels, clamp]() mutable {
      const auto& upv = co.grad_view();
      if (upv.empty()) return;
      const Shape& s = cp.shape();
      T up = upv[0] / static_cast<T>(pixels);
      auto& g = cp.grad();
      const T* pp = cp.data();
      const T* pt = ct.data();
      for (int64_t n = 0; n < s.n; ++n)
        for (int64_t c = 0; c < s.c; ++c) {
          int64_t base = (n * s.c + c) * sp;
          for (int64_t q = 0; q < sp; ++q)
            if (pt[base + q] == T(1) && pp[base + q] > clamp)
              g[base + q] -= up / pp[base + q];
        }
    });
  }
  return out;
}

}  // namespace lapseg
