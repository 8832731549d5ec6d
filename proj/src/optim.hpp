#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "tensor.hpp"

namespace lapseg {

// One optimizable tensor. `decay` marks parameters subject to L2 weight
// decay (convolution weights); biases and normalization parameters stay
// exempt.
template <typename T>
struct ParamRef {
  std::string name;
  Tensor<T> tensor;
  bool decay = false;
};

// Adam with coupled L2 regularization (decay folded into the gradient before
// the moment updates) and a single shared step counter.
template <typename T>
class Adam {
 public:
  struct Slot {
    std::vector<T> m, v;
  };

  Adam(std::vector<ParamRef<T>> params, T lr, T weight_decay, T beta1 = static_cast<T>(0.9),
       T beta2 = static_cast<T>(0.999), T eps = static_cast<T>(1e-8))
      : params_(std::move(params)),
        lr_(lr),
        weight_decay_(weight_decay),
        beta1_(beta1),
        beta2_(beta2),
        eps_(eps) {
    slots_.resize(params_.size());
    for (size_t i = 0; i < params_.size(); ++i) {
      size_t n = static_cast<size_t>(params_[i].tensor.size());
      slots_[i].m.assign(n, T(0));
      slots_[i].v.assign(n, T(0));
    }
  }

  void zero_grad() {
    for (auto& p : params_) p.tensor.zero_grad();
  }

  void step() {
    ++t_;
    const T bc1 = T(1) - std::pow(beta1_, static_cast<T>(t_));
    const T bc2 = T(1) - std::pow(beta2_, static_cast<T>(t_));
    for (size_t i = 0; i < params_.size(); ++i) {
      auto& p = params_[i];
      auto& slot = slots_[i];
      T* theta = p.tensor.data();
      auto& grad = p.tensor.grad();
      const bool decay = p.decay && weight_decay_ != T(0);
      for (size_t j = 0; j < grad.size(); ++j) {
        T g = grad[j];
        if (decay) g += weight_decay_ * theta[j];
        slot.m[j] = beta1_ * slot.m[j] + (T(1) - beta1_) * g;
        slot.v[j] = beta2_ * slot.v[j] + (T(1) - beta2_) * g * g;
        T mhat = slot.m[j] / bc1;
        T vhat = slot.v[j] / bc2;
        theta[j] -= lr_ * mhat / (std::sqrt(vhat) + eps_);
      }
    }
  }

  void set_lr(T lr) { lr_ = lr; }
  T lr() const { return lr_; }
  int64_t step_count() const { return t_; }

  const std::vector<ParamRef<T>>& params() const { return params_; }
  const std::vector<Slot>& slots() const { return slots_; }

  // Restores moment buffers and the step counter from a checkpoint.
  void restore(int64_t step, std::vector<Slot> slots) {
    if (slots.size() != slots_.size()) {
      throw ContractError("adam restore: " + std::to_string(slots.size()) + " slots for " +
                          std::to_string(slots_.size()) + " parameters");
    }
    for (size_t i = 0; i < slots.size(); ++i) {
      if (slots[i].m.size() != slots_[i].m.size() || slots[i].v.size() != slots_[i].v.size()) {
        throw ContractError("adam restore: slot " + std::to_string(i) + " size mismatch");
      }
    }
    slots_ = std::move(slots);
    t_ = step;
  }

 private:
  std::vector<ParamRef<T>> params_;
  std::vector<Slot> slots_;
  T lr_, weight_decay_, beta1_, beta2_, eps_;
  int64_t t_ = 0;
};

// Step decay: the learning rate halves every `period` epochs. Uses ldexp so
// repeated halving is exact in binary floating point.
template <typename T>
T scheduled_lr(T initial, int64_t epoch, int64_t period) {
  if (period < 1) throw ConfigError("lr schedule: halving period must be >= 1");
  if (epoch < 0) throw ConfigError("lr schedule: negative epoch");
  int64_t k = epoch / period;
  if (k > 1000) k = 1000;  // below denormal range regardless of T
  return static_cast<T>(std::ldexp(static_cast<double>(initial), -static_cast<int>(k)));
}

}  // namespace lapseg
