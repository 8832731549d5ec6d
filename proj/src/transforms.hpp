#pragma once

#include <array>
#include <string>
#include <utility>
#include <vector>

#include "taxonomy.hpp"
#include "tensor.hpp"

namespace lapseg {

// Per-channel pixel statistics on the [0,1] scale.
struct NormalizationStats {
  std::array<double, 3> mean = {0.295, 0.204, 0.197};
  std::array<double, 3> std = {0.221, 0.188, 0.182};

  static NormalizationStats load(const std::string& path);
  void save(const std::string& path) const;
  void validate() const;
};

// out = (img - mean_c) / std_c, channelwise over (n,3,h,w).
Tensor<float> normalize(const Tensor<float>& img, const NormalizationStats& stats);
Tensor<float> denormalize(const Tensor<float>& img, const NormalizationStats& stats);

// Streaming per-channel mean/std (Welford) over whole image sets.
class StatsAccumulator {
 public:
  void add(const Tensor<float>& img);  // (1,3,h,w) in [0,1]
  NormalizationStats finalize() const;  // population std; zero spread is an error
  int64_t pixels() const { return count_; }

 private:
  int64_t count_ = 0;
  std::array<double, 3> mean_ = {0, 0, 0};
  std::array<double, 3> m2_ = {0, 0, 0};
};

// Bilinear resample on the half-pixel grid; same-size calls copy exactly.
Tensor<float> resize_image(const Tensor<float>& img, int64_t out_h, int64_t out_w);
// Nearest-neighbor: class indices are never blended.
LabelMap resize_mask(const LabelMap& map, int64_t out_h, int64_t out_w);

Tensor<float> hflip_image(const Tensor<float>& img);
LabelMap hflip_mask(const LabelMap& map);

Tensor<float> crop_image(const Tensor<float>& img, int64_t top, int64_t left, int64_t h, int64_t w);
LabelMap crop_mask(const LabelMap& map, int64_t top, int64_t left, int64_t h, int64_t w);

// The 10-crop family of a 256x256 pair: TL, TR, BL, BR, Center, then the
// horizontal flips of each, in that order. Crops are 224x224.
struct CropSpec {
  int64_t top;
  int64_t left;
  bool flip;
};
const std::array<CropSpec, 10>& ten_crop_specs();  // source 256, crop 224

struct CropPair {
  Tensor<float> image;
  LabelMap mask;
};
std::vector<CropPair> ten_crop(const Tensor<float>& img, const LabelMap& mask);

// Dense labels -> one-hot float planes (1,num_classes,h,w).
Tensor<float> one_hot(const LabelMap& map, int64_t num_classes);

}  // namespace lapseg
