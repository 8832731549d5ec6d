#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "tensor.hpp"

namespace lapseg {

// Per-channel batch normalization over (n, h, w). Training mode normalizes
// with biased batch statistics and folds them into the running estimates;
// eval mode normalizes with the running estimates. Running variance stores
// the biased batch variance as well, so train and eval agree in the limit.
template <typename T>
struct BatchNorm2d {
  int64_t channels = 0;
  T eps = static_cast<T>(1e-5);
  T momentum = static_cast<T>(0.1);
  Tensor<T> gamma, beta, running_mean, running_var;

  explicit BatchNorm2d(int64_t c) : channels(c) {
    gamma = Tensor<T>::full({1, c, 1, 1}, T(1), true);
    beta = Tensor<T>::zeros({1, c, 1, 1}, true);
    running_mean = Tensor<T>::zeros({1, c, 1, 1});
    running_var = Tensor<T>::full({1, c, 1, 1}, T(1));
  }

  Tensor<T> forward(const Tensor<T>& x, Tape<T>* tape, bool training,
                    const std::string& who = "batchnorm2d") {
    const Shape& s = x.shape();
    if (s.c != channels) {
      throw ShapeError(who + ": input has " + std::to_string(s.c) + " channels, layer expects " +
                       std::to_string(channels));
    }
    const int64_t sp = s.h * s.w;
    const int64_t m = s.n * sp;
    if (training && m < 2) {
      throw ContractError(who + ": training needs at least 2 values per channel, got n*h*w = " +
                          std::to_string(m) + " for input " + s.str());
    }

    auto out = Tensor<T>::zeros(s);
    auto xhat = std::make_shared<std::vector<T>>(static_cast<size_t>(s.elems()));
    auto inv_std = std::make_shared<std::vector<T>>(static_cast<size_t>(channels));

    const T* px = x.data();
    T* po = out.data();
    T* xh = xhat->data();
    for (int64_t c = 0; c < channels; ++c) {
      T mu, var;
      if (training) {
        T acc = 0;
        for (int64_t n = 0; n < s.n; ++n) {
          const T* row = px + (n * channels + c) * sp;
          for (int64_t p = 0; p < sp; ++p) acc += row[p];
        }
        mu = acc / static_cast<T>(m);
        T vacc = 0;
        for (int64_t n = 0; n < s.n; ++n) {
          const T* row = px + (n * channels + c) * sp;
          for (int64_t p = 0; p < sp; ++p) {
            T d = row[p] - mu;
            vacc += d * d;
          }
        }
        var = vacc / static_cast<T>(m);
        running_mean.data()[c] = (T(1) - momentum) * running_mean.data()[c] + momentum * mu;
        running_var.data()[c] = (T(1) - momentum) * running_var.data()[c] + momentum * var;
      } else {
        mu = running_mean.data()[c];
        var = running_var.data()[c];
      }
      T is = T(1) / std::sqrt(var + eps);
      (*inv_std)[c] = is;
      T gc = gamma.data()[c];
      T bc = beta.data()[c];
      for (int64_t n = 0; n < s.n; ++n) {
        const T* row = px + (n * channels + c) * sp;
        T* orow = po + (n * channels + c) * sp;
        T* hrow = xh + (n * channels + c) * sp;
        for (int64_t p = 0; p < sp; ++p) {
          T h = (row[p] - mu) * is;
          hrow[p] = h;
          orow[p] = gc * h + bc;
        }
      }
    }

    if (detail::track(tape,
                      {x.requires_grad(), gamma.requires_grad(), beta.requires_grad()})) {
      out.set_requires_grad(true);
      Tensor<T> cx = x, cg = gamma, cb = beta, co = out;
      int64_t ch = channels;
      tape->record([cx, cg, cb, co, xhat, inv_std, ch, sp, m, training]() mutable {
        const auto& up = co.grad_view();
        if (up.empty()) return;
        const Shape& s = cx.shape();
        const T* xh = xhat->data();
        for (int64_t c = 0; c < ch; ++c) {
          T sum_dy = 0, sum_dy_xh = 0;
          for (int64_t n = 0; n < s.n; ++n) {
            int64_t base = (n * ch + c) * sp;
            for (int64_t p = 0; p < sp; ++p) {
              sum_dy += up[base + p];
              sum_dy_xh += up[base + p] * xh[base + p];
            }
          }
          if (cg.requires_grad()) cg.grad()[c] += sum_dy_xh;
          if (cb.requires_grad()) cb.grad()[c] += sum_dy;
          if (!cx.requires_grad()) continue;
          auto& gx = cx.grad();
          T gis = cg.data()[c] * (*inv_std)[c];
          if (training) {
            T mdy = sum_dy / static_cast<T>(m);
            T mdyxh = sum_dy_xh / static_cast<T>(m);
            for (int64_t n = 0; n < s.n; ++n) {
              int64_t base = (n * ch + c) * sp;
              for (int64_t p = 0; p < sp; ++p)
                gx[base + p] += gis * (up[base + p] - mdy - xh[base + p] * mdyxh);
            }
          } else {
            for (int64_t n = 0; n < s.n; ++n) {
              int64_t base = (n * ch + c) * sp;
              for (int64_t p = 0; p < sp; ++p) gx[base + p] += gis * up[base + p];
            }
          }
        }
      });
    }
    return out;
  }
};

}  // namespace lapseg
