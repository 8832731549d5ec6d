#include "audit.hpp"

#include <cmath>

#include "losses.hpp"
#include "model.hpp"

namespace lapseg {

namespace {

Tensor<double> randt(const Shape& s, Rng& r, double lo = -1, double hi = 1) {
  auto t = Tensor<double>::zeros(s);
  for (int64_t i = 0; i < t.size(); ++i) t.data()[i] = lo + (hi - lo) * r.uniform();
  return t;
}

Tensor<double> onehot(const Shape& s, Rng& r) {
  auto t = Tensor<double>::zeros(s);
  const int64_t sp = s.h * s.w;
  for (int64_t n = 0; n < s.n; ++n)
    for (int64_t p = 0; p < sp; ++p)
      t.data()[(n * s.c + static_cast<int64_t>(r.uniform_int(static_cast<uint64_t>(s.c)))) * sp +
               p] = 1.0;
  return t;
}

}  // namespace

std::vector<AuditCase> audit_ops() {
  std::vector<AuditCase> out;
  Rng r(42);
  auto add = [&out](const std::string& name, GradCheckReport rep, double tol = 1e-4) {
    out.push_back({name, rep, tol});
  };

  {  // conv2d wrt x, w, b
    auto w = randt({4, 3, 4, 4}, r);
    auto b = randt({1, 4, 1, 1}, r);
    auto x = randt({2, 3, 7, 6}, r);
    auto tgt = randt({2, 4, 3, 3}, r);
    ConvGeom g{3, 4, 4, 4, 2, 1};
    add("conv2d/x", grad_check([&](Tensor<double>& t, Tape<double>* tp) {
          return mse_loss(conv2d(t, w, b, g, tp), tgt, tp);
        }, x));
    add("conv2d/w", grad_check([&](Tensor<double>& t, Tape<double>* tp) {
          return mse_loss(conv2d(x, t, b, g, tp), tgt, tp);
        }, w));
    add("conv2d/b", grad_check([&](Tensor<double>& t, Tape<double>* tp) {
          return mse_loss(conv2d(x, w, t, g, tp), tgt, tp);
        }, b));
  }
  {  // conv_transpose2d wrt x, w, b
    auto w = randt({4, 3, 4, 4}, r);
    auto b = randt({1, 3, 1, 1}, r);
    auto x = randt({2, 4, 5, 5}, r);
    auto tgt = randt({2, 3, 10, 10}, r);
    ConvGeom g{4, 3, 4, 4, 2, 1};
    add("conv_transpose2d/x", grad_check([&](Tensor<double>& t, Tape<double>* tp) {
          return mse_loss(conv_transpose2d(t, w, b, g, tp), tgt, tp);
        }, x));
    add("conv_transpose2d/w", grad_check([&](Tensor<double>& t, Tape<double>* tp) {
          return mse_loss(conv_transpose2d(x, t, b, g, tp), tgt, tp);
        }, w));
    add("conv_transpose2d/b", grad_check([&](Tensor<double>& t, Tape<double>* tp) {
          return mse_loss(conv_transpose2d(x, w, t, g, tp), tgt, tp);
        }, b));
  }
  {  // batchnorm, train and eval, wrt x / gamma / beta
    BatchNorm2d<double> bn(3);
    auto x = randt({2, 3, 4, 4}, r);
    auto tgt = randt({2, 3, 4, 4}, r);
    for (int64_t i = 0; i < 3; ++i) {
      bn.gamma.data()[i] = 0.5 + r.uniform();
      bn.beta.data()[i] = r.uniform() - 0.5;
    }
    add("batchnorm_train/x", grad_check([&](Tensor<double>& t, Tape<double>* tp) {
          return mse_loss(bn.forward(t, tp, true), tgt, tp);
        }, x));
    add("batchnorm_train/gamma", grad_check([&](Tensor<double>&, Tape<double>* tp) {
          return mse_loss(bn.forward(x, tp, true), tgt, tp);
        }, bn.gamma));
    add("batchnorm_train/beta", grad_check([&](Tensor<double>&, Tape<double>* tp) {
          return mse_loss(bn.forward(x, tp, true), tgt, tp);
        }, bn.beta));
    for (int64_t i = 0; i < 3; ++i) {
      bn.running_mean.data()[i] = 0.2 * static_cast<double>(i);
      bn.running_var.data()[i] = 0.5 + 0.3 * static_cast<double>(i);
    }
    add("batchnorm_eval/x", grad_check([&](Tensor<double>& t, Tape<double>* tp) {
          return mse_loss(bn.forward(t, tp, false), tgt, tp);
        }, x));
    add("batchnorm_eval/gamma", grad_check([&](Tensor<double>&, Tape<double>* tp) {
          return mse_loss(bn.forward(x, tp, false), tgt, tp);
        }, bn.gamma));
  }
  {  // activations
    auto x = randt({2, 3, 5, 5}, r);
    auto tgt = randt({2, 3, 5, 5}, r);
    for (int64_t i = 0; i < x.size(); ++i)  // keep relu inputs away from the kink
      if (std::abs(x.data()[i]) < 5e-3) x.data()[i] = 0.1;
    add("relu", grad_check([&](Tensor<double>& t, Tape<double>* tp) {
          return mse_loss(relu(t, tp), tgt, tp);
        }, x));
    add("sigmoid", grad_check([&](Tensor<double>& t, Tape<double>* tp) {
          return mse_loss(sigmoid(t, tp), tgt, tp);
        }, x));
    add("softmax_channels", grad_check([&](Tensor<double>& t, Tape<double>* tp) {
          return mse_loss(softmax_channels(t, tp), tgt, tp);
        }, x));
  }
  {  // dropout with a frozen mask
    Dropout2d<double> dr(0.5, 99);
    auto x = randt({2, 4, 3, 3}, r);
    auto tgt = randt({2, 4, 3, 3}, r);
    add("dropout_frozen/x", grad_check([&](Tensor<double>& t, Tape<double>* tp) {
          dr.reseed(77);
          return mse_loss(dr.forward(t, tp, true), tgt, tp);
        }, x));
  }
  {  // losses; dice and cross-entropy through softmax so inputs stay on the simplex
    auto x = randt({2, 3, 4, 4}, r);
    auto t1 = onehot({2, 3, 4, 4}, r);
    add("dice", grad_check([&](Tensor<double>& t, Tape<double>* tp) {
          return dice_loss(softmax_channels(t, tp), t1, tp);
        }, x));
    add("cross_entropy", grad_check([&](Tensor<double>& t, Tape<double>* tp) {
          return cross_entropy_loss(softmax_channels(t, tp), t1, tp);
        }, x));
    auto p = randt({2, 3, 4, 4}, r);
    auto tgt = randt({2, 3, 4, 4}, r);
    add("mse", grad_check([&](Tensor<double>& t, Tape<double>* tp) {
          return mse_loss(t, tgt, tp);
        }, p));
  }
  {  // reductions stay exact on all-zero input
    auto z = Tensor<double>::zeros({1, 1, 2, 2});
    add("sum_zero_exact",
        grad_check([](Tensor<double>& t, Tape<double>* tp) { return sum(t, tp); }, z), 0.0);
  }
  return out;
}

std::vector<AuditCase> audit_model() {
  std::vector<AuditCase> out;
  Rng r(7);
  {  // eval mode: input and a deep encoder weight
    ModelConfig cfg;
    cfg.num_classes = 3;
    cfg.seed = 5;
    Model<double> m(cfg);
    auto x = randt({1, 3, 64, 64}, r, 0, 1);
    auto t1 = onehot({1, 3, 64, 64}, r);
    out.push_back({"model_eval/x",
                   grad_check([&](Tensor<double>& t, Tape<double>* tp) {
                     return dice_loss(m.forward(t, tp, false), t1, tp);
                   }, x, 1e-3, 24, 7),
                   1e-4});
    out.push_back({"model_eval/enc3.weight",
                   grad_check([&](Tensor<double>&, Tape<double>* tp) {
                     return dice_loss(m.forward(x, tp, false), t1, tp);
                   }, m.blocks()[2].weight, 1e-3, 8, 11),
                   1e-4});
  }
  {  // train mode with frozen dropout masks. The smaller step keeps the
     // truncation error of the central difference below tolerance; batchnorm
     // at the 1x1 latent has large higher derivatives.
    ModelConfig cfg;
    cfg.num_classes = 3;
    cfg.seed = 6;
    Model<double> m(cfg);
    auto x = randt({2, 3, 64, 64}, r, 0, 1);
    auto t1 = onehot({2, 3, 64, 64}, r);
    out.push_back({"model_train/x",
                   grad_check([&](Tensor<double>& t, Tape<double>* tp) {
                     m.reseed_dropout(31337);
                     return dice_loss(m.forward(t, tp, true), t1, tp);
                   }, x, 1e-4, 16, 13),
                   1e-4});
  }
  return out;
}

}  // namespace lapseg
