#pragma once

#include <memory>
#include <string>
#include <vector>

#include "rng.hpp"
#include "tensor.hpp"

namespace lapseg {

// Channel dropout: each (n, c) feature map is zeroed whole with probability p
// during training, and survivors are scaled by 1/(1-p) so eval (an identity)
// matches in expectation. The layer owns its RNG; reseed() replays the exact
// mask sequence, which the gradient auditor relies on.
template <typename T>
struct Dropout2d {
  T p = static_cast<T>(0.5);
  Rng rng;

  Dropout2d(T prob, uint64_t seed) : p(prob), rng(seed) {
    if (!(p >= T(0) && p < T(1))) {
      throw ConfigError("dropout2d: probability must be in [0, 1), got " + std::to_string(p));
    }
  }

  void reseed(uint64_t seed) { rng.reseed(seed); }

  Tensor<T> forward(const Tensor<T>& x, Tape<T>* tape, bool training) {
    if (!training || p == T(0)) return x;
    const Shape& s = x.shape();
    const int64_t sp = s.h * s.w;
    const int64_t maps = s.n * s.c;
    auto scale = std::make_shared<std::vector<T>>(static_cast<size_t>(maps));
    const T keep = T(1) / (T(1) - p);
    for (int64_t i = 0; i < maps; ++i)
      (*scale)[i] = rng.uniform() < static_cast<double>(p) ? T(0) : keep;

    auto out = Tensor<T>::zeros(s);
    const T* px = x.data();
    T* po = out.data();
    for (int64_t i = 0; i < maps; ++i) {
      T sc = (*scale)[i];
      if (sc == T(0)) continue;
      const T* row = px + i * sp;
      T* orow = po + i * sp;
      for (int64_t q = 0; q < sp; ++q) orow[q] = row[q] * sc;
    }

    if (detail::track(tape, {x.requires_grad()})) {
      out.set_requires_grad(true);
      Tensor<T> cx = x, co = out;
      tape->record([cx, co, scale, maps, sp]() mutable {
        const auto& up = co.grad_view();
        if (up.empty()) return;
        auto& g = cx.grad();
        for (int64_t i = 0; i < maps; ++i) {
          T sc = (*scale)[i];
          if (sc == T(0)) continue;
          for (int64_t q = 0; q < sp; ++q) g[i * sp + q] += up[i * sp + q] * sc;
        }
      });
    }
    return out;
  }
};

}  // namespace lapseg
