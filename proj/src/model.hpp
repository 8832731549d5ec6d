#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "activations.hpp"
#include "batchnorm.hpp"
#include "conv.hpp"
#include "dropout.hpp"
#include "optim.hpp"
#include "rng.hpp"
#include "tensor.hpp"

namespace lapseg {

enum class Head { Reconstruction, Segmentation };

inline std::string head_to_string(Head h) {
  return h == Head::Reconstruction ? "reconstruction" : "segmentation";
}

inline Head head_from_string(const std::string& s) {
  if (s == "reconstruction") return Head::Reconstruction;
  if (s == "segmentation") return Head::Segmentation;
  throw ConfigError("unknown head '" + s + "' (expected reconstruction or segmentation)");
}

// Static description of the 10-layer encoder-decoder. The geometry is fixed
// (4x4 kernels, mirrored strides/paddings); the filter lists are exposed so
// misconfiguration fails loudly instead of silently changing the network.
struct ModelConfig {
  Head head = Head::Segmentation;
  int64_t num_classes = 9;  // segmentation output channels
  int64_t in_channels = 3;
  uint64_t seed = 0;
  double dropout_p = 0.5;
  std::vector<int64_t> encoder_filters = {64, 128, 256, 512, 1024};
  std::vector<int64_t> decoder_filters = {512, 256, 128, 64};  // final layer adds out_channels

  int64_t out_channels() const {
    return head == Head::Reconstruction ? in_channels : num_classes;
  }

  void validate() const {
    if (in_channels < 1) throw ConfigError("model: in_channels must be positive");
    if (head == Head::Segmentation && num_classes < 2) {
      throw ConfigError("model: segmentation needs num_classes >= 2, got " +
                        std::to_string(num_classes));
    }
    if (encoder_filters.size() != 5 || decoder_filters.size() != 4) {
      throw ConfigError("model: expected 5 encoder filters and 4 decoder filters");
    }
    for (size_t i = 0; i < 4; ++i) {
      if (decoder_filters[i] != encoder_filters[3 - i]) {
        throw ConfigError("model: decoder filter " + std::to_string(i + 1) + " (" +
                          std::to_string(decoder_filters[i]) + ") does not mirror encoder filter " +
                          std::to_string(4 - i) + " (" + std::to_string(encoder_filters[3 - i]) +
                          ")");
      }
    }
    if (!(dropout_p >= 0.0 && dropout_p < 1.0)) {
      throw ConfigError("model: dropout_p must be in [0, 1)");
    }
  }
};

namespace detail {

// Per-layer fixed geometry. Encoder halves four times then shrinks by 3;
// the decoder mirrors it exactly.
inline const int64_t kEncStride[5] = {2, 2, 2, 2, 1};
inline const int64_t kEncPad[5] = {1, 1, 1, 1, 0};
inline const int64_t kDecStride[5] = {1, 2, 2, 2, 2};
inline const int64_t kDecPad[5] = {0, 1, 1, 1, 1};

}  // namespace detail

template <typename T>
class Model {
 public:
  struct Block {
    std::string name;
    bool transpose = false;
    ConvGeom geom;
    Tensor<T> weight, bias;
    std::unique_ptr<BatchNorm2d<T>> bn;
    std::unique_ptr<Dropout2d<T>> drop;
    bool relu_after = true;
  };

  explicit Model(ModelConfig cfg) : cfg_(std::move(cfg)) {
    cfg_.validate();
    const auto& ef = cfg_.encoder_filters;
    std::vector<int64_t> df = cfg_.decoder_filters;
    df.push_back(cfg_.out_channels());

    Rng rng(cfg_.seed);
    int64_t c = cfg_.in_channels;
    for (int i = 0; i < 5; ++i) {
      Block b;
      b.name = "enc" + std::to_string(i + 1);
      b.geom = ConvGeom{c, ef[i], 4, 4, detail::kEncStride[i], detail::kEncPad[i]};
      init_conv(b, rng, /*transpose=*/false);
      if (i > 0) b.bn = std::make_unique<BatchNorm2d<T>>(ef[i]);
      blocks_.push_back(std::move(b));
      c = ef[i];
    }
    for (int i = 0; i < 5; ++i) {
      Block b;
      b.name = "dec" + std::to_string(i + 1);
      b.transpose = true;
      b.geom = ConvGeom{c, df[i], 4, 4, detail::kDecStride[i], detail::kDecPad[i]};
      init_conv(b, rng, /*transpose=*/true);
      if (i < 4) b.bn = std::make_unique<BatchNorm2d<T>>(df[i]);
      if (i < 3 && cfg_.dropout_p > 0.0) {
        b.drop = std::make_unique<Dropout2d<T>>(static_cast<T>(cfg_.dropout_p), rng.next_u64());
      }
      if (i == 4) b.relu_after = false;
      blocks_.push_back(std::move(b));
      c = df[i];
    }
  }

  const ModelConfig& config() const { return cfg_; }
  std::vector<Block>& blocks() { return blocks_; }
  const std::vector<Block>& blocks() const { return blocks_; }

  // Rejects inputs the stride chain cannot map back to their own size.
  void validate_input(const Shape& s) const {
    if (s.n < 1) throw ShapeError("model forward: batch size must be >= 1, got " + s.str());
    if (s.c != cfg_.in_channels) {
      throw ShapeError("model forward: input has " + std::to_string(s.c) +
                       " channels, model expects " + std::to_string(cfg_.in_channels));
    }
    int64_t h = s.h, w = s.w;
    for (int i = 0; i < 5; ++i) {
      const std::string name = "enc" + std::to_string(i + 1);
      const int64_t st = detail::kEncStride[i], pd = detail::kEncPad[i];
      for (int64_t d : {h, w}) {
        int64_t span = d + 2 * pd - 4;
        if (span < 0 || span % st != 0) {
          throw ShapeError("model forward: layer " + name + " cannot consume a " +
                           std::to_string(h) + "x" + std::to_string(w) +
                           " input (supported sizes are multiples of 16, at least 64)");
        }
      }
      h = conv_out_dim(h, 4, st, pd);
      w = conv_out_dim(w, 4, st, pd);
      if (h < 1 || w < 1) {
        throw ShapeError("model forward: layer " + name + " would produce an empty " +
                         std::to_string(h) + "x" + std::to_string(w) +
                         " map (supported sizes are multiples of 16, at least 64)");
      }
    }
  }

  Tensor<T> forward(const Tensor<T>& x, Tape<T>* tape, bool training) {
    validate_input(x.shape());
    Tensor<T> cur = x;
    for (auto& b : blocks_) {
      cur = b.transpose ? conv_transpose2d(cur, b.weight, b.bias, b.geom, tape, b.name)
                        : conv2d(cur, b.weight, b.bias, b.geom, tape, b.name);
      if (b.bn) cur = b.bn->forward(cur, tape, training, b.name + ".bn");
      if (b.drop) cur = b.drop->forward(cur, tape, training);
      if (b.relu_after) cur = relu(cur, tape);
    }
    return cfg_.head == Head::Segmentation ? softmax_channels(cur, tape) : sigmoid(cur, tape);
  }

  // Layer-by-layer output shapes for a hypothetical input; nothing runs.
  std::vector<std::pair<std::string, Shape>> trace(const Shape& in) const {
    validate_input(in);
    std::vector<std::pair<std::string, Shape>> out;
    Shape s = in;
    for (const auto& b : blocks_) {
      s.c = b.geom.out_channels;
      if (b.transpose) {
        s.h = conv_transpose_out_dim(s.h, b.geom.kh, b.geom.stride, b.geom.padding);
        s.w = conv_transpose_out_dim(s.w, b.geom.kw, b.geom.stride, b.geom.padding);
      } else {
        s.h = conv_out_dim(s.h, b.geom.kh, b.geom.stride, b.geom.padding);
        s.w = conv_out_dim(s.w, b.geom.kw, b.geom.stride, b.geom.padding);
      }
      out.emplace_back(b.name, s);
    }
    return out;
  }

  // Learnable tensors in layer order. Only convolution weights carry decay.
  std::vector<ParamRef<T>> parameters() {
    std::vector<ParamRef<T>> out;
    for (auto& b : blocks_) {
      out.push_back({b.name + ".weight", b.weight, true});
      out.push_back({b.name + ".bias", b.bias, false});
      if (b.bn) {
        out.push_back({b.name + ".bn.gamma", b.bn->gamma, false});
        out.push_back({b.name + ".bn.beta", b.bn->beta, false});
      }
    }
    return out;
  }

  // Everything a checkpoint persists: parameters plus BN running statistics.
  std::vector<ParamRef<T>> state() {
    std::vector<ParamRef<T>> out;
    for (auto& b : blocks_) {
      out.push_back({b.name + ".weight", b.weight, true});
      out.push_back({b.name + ".bias", b.bias, false});
      if (b.bn) {
        out.push_back({b.name + ".bn.gamma", b.bn->gamma, false});
        out.push_back({b.name + ".bn.beta", b.bn->beta, false});
        out.push_back({b.name + ".bn.running_mean", b.bn->running_mean, false});
        out.push_back({b.name + ".bn.running_var", b.bn->running_var, false});
      }
    }
    return out;
  }

  int64_t param_count() {
    int64_t n = 0;
    for (auto& p : parameters()) n += p.tensor.size();
    return n;
  }

  // Copies every layer except the final decoder head from src (including BN
  // running statistics). Returns the number of layers copied.
  int transfer_from(Model& src) {
    std::string mismatched;
    int layers = 0;
    for (size_t i = 0; i + 1 < blocks_.size(); ++i) {
      Block& dst = blocks_[i];
      Block& s = src.blocks_[i];
      if (!(dst.weight.shape() == s.weight.shape()) || dst.name != s.name ||
          static_cast<bool>(dst.bn) != static_cast<bool>(s.bn)) {
        mismatched += (mismatched.empty() ? "" : ", ") + dst.name;
        continue;
      }
      dst.weight.values() = s.weight.values();
      dst.bias.values() = s.bias.values();
      if (dst.bn) {
        dst.bn->gamma.values() = s.bn->gamma.values();
        dst.bn->beta.values() = s.bn->beta.values();
        dst.bn->running_mean.values() = s.bn->running_mean.values();
        dst.bn->running_var.values() = s.bn->running_var.values();
      }
      ++layers;
    }
    if (!mismatched.empty()) {
      throw ContractError("transfer_weights: layer shape mismatch at " + mismatched);
    }
    return layers;
  }

  // Replays dropout masks deterministically; the gradient auditor calls this
  // before every loss evaluation so train-mode checks see frozen masks.
  void reseed_dropout(uint64_t seed) {
    uint64_t i = 0;
    for (auto& b : blocks_)
      if (b.drop) b.drop->reseed(seed + 0x9e3779b97f4a7c15ULL * ++i);
  }

 private:
  static void init_conv(Block& b, Rng& rng, bool transpose) {
    const ConvGeom& g = b.geom;
    Shape ws = transpose ? Shape{g.in_channels, g.out_channels, g.kh, g.kw}
                         : Shape{g.out_channels, g.in_channels, g.kh, g.kw};
    b.weight = Tensor<T>::zeros(ws, true);
    // fan_in counts the second weight axis times the receptive field.
    double fan_in = static_cast<double>(ws.c * g.kh * g.kw);
    double stddev = std::sqrt(2.0 / fan_in);
    T* w = b.weight.data();
    for (int64_t i = 0; i < b.weight.size(); ++i)
      w[i] = static_cast<T>(rng.normal() * stddev);
    b.bias = Tensor<T>::zeros({1, g.out_channels, 1, 1}, true);
  }

  ModelConfig cfg_;
  std::vector<Block> blocks_;
};

}  // namespace lapseg
