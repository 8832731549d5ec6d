#pragma once

#include <functional>
#include <memory>
#include <utility>
#include <type_traits>
#include <vector>

#include "error.hpp"
#include "shape.hpp"

namespace lapseg {

// A Tensor is a cheap handle onto shared storage. Values are immutable by
// convention once an op has consumed them; only the grad buffer accumulates.
template <typename T>
class Tensor {
 public:
  Tensor() : s_(std::make_shared<Storage>()) {}

  static Tensor zeros(const Shape& shape, bool requires_grad = false) {
    check_shape(shape);
    Tensor t;
    t.s_->shape = shape;
    t.s_->value.assign(static_cast<size_t>(shape.elems()), T(0));
    t.s_->requires_grad = requires_grad;
    return t;
  }

  static Tensor full(const Shape& shape, T fill, bool requires_grad = false) {
    check_shape(shape);
    Tensor t;
    t.s_->shape = shape;
    t.s_->value.assign(static_cast<size_t>(shape.elems()), fill);
    t.s_->requires_grad = requires_grad;
    return t;
  }

  static Tensor from_buffer(const Shape& shape, std::vector<T> values, bool requires_grad = false) {
    check_shape(shape);
    if (static_cast<int64_t>(values.size()) != shape.elems()) {
      throw ShapeError("from_buffer: got " + std::to_string(values.size()) + " values for shape " +
                       shape.str());
    }
    Tensor t;
    t.s_->shape = shape;
    t.s_->value = std::move(values);
    t.s_->requires_grad = requires_grad;
    return t;
  }

  const Shape& shape() const { return s_->shape; }
  int64_t size() const { return s_->shape.elems(); }

  const T* data() const { return s_->value.data(); }
  T* data() { return s_->value.data(); }
  const std::vector<T>& values() const { return s_->value; }
  std::vector<T>& values() { return s_->value; }

  bool requires_grad() const { return s_->requires_grad; }
  void set_requires_grad(bool v) { s_->requires_grad = v; }

  bool has_grad() const { return !s_->grad.empty(); }

  // Grad buffer, allocated (zeroed) on first touch.
  std::vector<T>& grad() {
    if (s_->grad.empty()) s_->grad.assign(s_->value.size(), T(0));
    return s_->grad;
  }
  const std::vector<T>& grad_view() const { return s_->grad; }

  void zero_grad() {
    if (!s_->grad.empty()) std::fill(s_->grad.begin(), s_->grad.end(), T(0));
  }

  void accumulate_grad(const std::vector<T>& g) {
    auto& dst = grad();
    for (size_t i = 0; i < dst.size(); ++i) dst[i] += g[i];
  }

  T item() const {
    if (!s_->shape.is_scalar()) {
      throw ContractError("item: tensor " + s_->shape.str() + " is not scalar");
    }
    return s_->value[0];
  }

  bool same_storage(const Tensor& o) const { return s_ == o.s_; }

 private:
  struct Storage {
    Shape shape;
    std::vector<T> value;
    std::vector<T> grad;
    bool requires_grad = false;
  };

  static void check_shape(const Shape& shape) {
    if (shape.n < 0 || shape.c < 0 || shape.h < 0 || shape.w < 0) {
      throw ShapeError("negative shape component " + shape.str());
    }
  }

  std::shared_ptr<Storage> s_;
};

// Reverse-mode tape. Ops append backward closures in forward order; backward
// replays them in reverse, summing gradients into shared inputs. A tape is
// one-shot: reset() before reuse.
template <typename T>
class Tape {
 public:
  void record(std::function<void()> backward_fn) { entries_.push_back(std::move(backward_fn)); }

  void backward(Tensor<T> loss) {
    if (!loss.shape().is_scalar()) {
      throw ContractError("backward: loss has shape " + loss.shape().str() + ", expected scalar");
    }
    if (consumed_) {
      throw ContractError("backward: tape already consumed; call reset() first");
    }
    consumed_ = true;
    loss.grad()[0] += T(1);
    for (auto it = entries_.rbegin(); it != entries_.rend(); ++it) (*it)();
    entries_.clear();
  }

  void reset() {
    entries_.clear();
    consumed_ = false;
  }

  size_t size() const { return entries_.size(); }
  bool consumed() const { return consumed_; }

 private:
  std::vector<std::function<void()>> entries_;
  bool consumed_ = false;
};

// Non-deduced tape parameter type for the free ops: the element type comes
// from the tensors, so callers may pass a literal nullptr.
template <typename T>
using TapeOf = Tape<std::type_identity_t<T>>;

namespace detail {

template <typename T>
inline bool track(const Tape<T>* tape, std::initializer_list<bool> grads) {
  if (!tape) return false;
  for (bool g : grads)
    if (g) return true;
  return false;
}

}  // namespace detail

template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b, TapeOf<T>* tape) {
  if (!(a.shape() == b.shape())) {
    throw ShapeError("add: shape mismatch " + a.shape().str() + " vs " + b.shape().str());
  }
  auto out = Tensor<T>::zeros(a.shape());
  const T* pa = a.data();
  const T* pb = b.data();
  T* po = out.data();
  for (int64_t i = 0; i < a.size(); ++i) po[i] = pa[i] + pb[i];
  if (detail::track(tape, {a.requires_grad(), b.requires_grad()})) {
    out.set_requires_grad(true);
    Tensor<T> ca = a, cb = b, co = out;
    tape->record([ca, cb, co]() mutable {
      const auto& up = co.grad_view();
      if (up.empty()) return;  // dead branch, nothing flowed back
      if (ca.requires_grad()) ca.accumulate_grad(up);
      if (cb.requires_grad()) cb.accumulate_grad(up);
    });
  }
  return out;
}

template <typename T>
Tensor<T> mul_scalar(const Tensor<T>& a, T s, TapeOf<T>* tape) {
  auto out = Tensor<T>::zeros(a.shape());
  const T* pa = a.data();
  T* po = out.data();
  for (int64_t i = 0; i < a.size(); ++i) po[i] = pa[i] * s;
  if (detail::track(tape, {a.requires_grad()})) {
    out.set_requires_grad(true);
    Tensor<T> ca = a, co = out;
    tape->record([ca, co, s]() mutable {
      const auto& up = co.grad_view();
      if (up.empty()) return;
      auto& g = ca.grad();
      for (size_t i = 0; i < g.size(); ++i) g[i] += s * up[i];
    });
  }
  return out;
}

template <typename T>
Tensor<T> sum(const Tensor<T>& a, TapeOf<T>* tape) {
  T acc = 0;
  const T* pa = a.data();
  for (int64_t i = 0; i < a.size(); ++i) acc += pa[i];
  auto out = Tensor<T>::full({1, 1, 1, 1}, acc);
  if (detail::track(tape, {a.requires_grad()})) {
    out.set_requires_grad(true);
    Tensor<T> ca = a, co = out;
    tape->record([ca, co]() mutable {
      if (co.grad_view().empty()) return;
      T up = co.grad_view()[0];
      auto& g = ca.grad();
      for (auto& v : g) v += up;
    });
  }
  return out;
}

template <typename T>
Tensor<T> mean(const Tensor<T>& a, TapeOf<T>* tape) {
  if (a.size() == 0) throw ShapeError("mean of empty tensor");
  T acc = 0;
  const T* pa = a.data();
  for (int64_t i = 0; i < a.size(); ++i) acc += pa[i];
  T inv = T(1) / static_cast<T>(a.size());
  auto out = Tensor<T>::full({1, 1, 1, 1}, acc * inv);
  if (detail::track(tape, {a.requires_grad()})) {
    out.set_requires_grad(true);
    Tensor<T> ca = a, co = out;
    tape->record([ca, co, inv]() mutable {
      if (co.grad_view().empty()) return;
      T up = co.grad_view()[0] * inv;
      auto& g = ca.grad();
      for (auto& v : g) v += up;
    });
  }
  return out;
}

}  // namespace lapseg
