#include "transforms.hpp"

#include <cmath>
#include <fstream>

#include "json.hpp"

namespace lapseg {

NormalizationStats NormalizationStats::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open stats file " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw DataError("stats file " + path + " is not valid JSON: " + e.what());
  }
  if (!j.contains("mean") || !j.contains("std") || j["mean"].size() != 3 || j["std"].size() != 3) {
    throw DataError("stats file " + path + ": expected {mean:[3], std:[3]}");
  }
  NormalizationStats s;
  for (size_t i = 0; i < 3; ++i) {
    s.mean[i] = j["mean"][i].get<double>();
    s.std[i] = j["std"][i].get<double>();
  }
  s.validate();
  return s;
}

void NormalizationStats::save(const std::string& path) const {
  validate();
  nlohmann::json j = {{"mean", mean}, {"std", std}};
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write stats file " + path);
  out << j.dump(2) << "\n";
}

void NormalizationStats::validate() const {
  for (size_t i = 0; i < 3; ++i) {
    if (!(std[i] > 0.0)) {
      throw DataError("normalization std for channel " + std::to_string(i) +
                      " must be positive, got " + std::to_string(std[i]));
    }
  }
}

namespace {

Tensor<float> affine_channels(const Tensor<float>& img, const std::array<double, 3>& shift,
                              const std::array<double, 3>& scale) {
  const Shape& s = img.shape();
  if (s.c != 3) throw ShapeError("normalize: expected 3 channels, got " + s.str());
  auto out = Tensor<float>::zeros(s);
  const int64_t sp = s.h * s.w;
  const float* in = img.data();
  float* po = out.data();
  for (int64_t n = 0; n < s.n; ++n)
    for (int64_t c = 0; c < 3; ++c) {
      const float sh = static_cast<float>(shift[static_cast<size_t>(c)]);
      const float sc = static_cast<float>(scale[static_cast<size_t>(c)]);
      const float* row = in + (n * 3 + c) * sp;
      float* orow = po + (n * 3 + c) * sp;
      for (int64_t p = 0; p < sp; ++p) orow[p] = (row[p] - sh) * sc;
    }
  return out;
}

}  // namespace

Tensor<float> normalize(const Tensor<float>& img, const NormalizationStats& stats) {
  stats.validate();
  std::array<double, 3> inv;
  for (size_t i = 0; i < 3; ++i) inv[i] = 1.0 / stats.std[i];
  return affine_channels(img, stats.mean, inv);
}

Tensor<float> denormalize(const Tensor<float>& img, const NormalizationStats& stats) {
  stats.validate();
  std::array<double, 3> neg;
  for (size_t i = 0; i < 3; ++i) neg[i] = -stats.mean[i] / stats.std[i];
  return affine_channels(img, neg, stats.std);
}

void StatsAccumulator::add(const Tensor<float>& img) {
  const Shape& s = img.shape();
  if (s.n != 1 || s.c != 3) {
    throw ContractError("stats: expected (1,3,h,w) images, got " + s.str());
  }
  const int64_t sp = s.h * s.w;
  const float* in = img.data();
  for (int64_t p = 0; p < sp; ++p) {
    ++count_;
    for (size_t c = 0; c < 3; ++c) {
      double v = in[static_cast<int64_t>(c) * sp + p];
      double d = v - mean_[c];
      mean_[c] += d / static_cast<double>(count_);
      m2_[c] += d * (v - mean_[c]);
    }
  }
}

NormalizationStats StatsAccumulator::finalize() const {
  if (count_ == 0) throw DataError("stats: no pixels accumulated");
  NormalizationStats s;
  for (size_t c = 0; c < 3; ++c) {
    s.mean[c] = mean_[c];
    s.std[c] = std::sqrt(m2_[c] / static_cast<double>(count_));
    if (!(s.std[c] > 0.0)) {
      throw DataError("stats: channel " + std::to_string(c) +
                      " has zero standard deviation (constant image set)");
    }
  }
  return s;
}

Tensor<float> resize_image(const Tensor<float>& img, int64_t out_h, int64_t out_w) {
  const Shape& s = img.shape();
  if (out_h < 1 || out_w < 1) throw ShapeError("resize_image: empty target");
  if (s.h == out_h && s.w == out_w) return img;
  auto out = Tensor<float>::zeros({s.n, s.c, out_h, out_w});
  const double sy = static_cast<double>(s.h) / static_cast<double>(out_h);
  const double sx = static_cast<double>(s.w) / static_cast<double>(out_w);
  const float* in = img.data();
  float* po = out.data();
  for (int64_t y = 0; y < out_h; ++y) {
    double fy = (static_cast<double>(y) + 0.5) * sy - 0.5;
    if (fy < 0) fy = 0;
    int64_t y0 = static_cast<int64_t>(fy);
    if (y0 > s.h - 1) y0 = s.h - 1;
    int64_t y1 = y0 + 1 < s.h ? y0 + 1 : s.h - 1;
    const double wy = fy - static_cast<double>(y0);
    for (int64_t x = 0; x < out_w; ++x) {
      double fx = (static_cast<double>(x) + 0.5) * sx - 0.5;
      if (fx < 0) fx = 0;
      int64_t x0 = static_cast<int64_t>(fx);
      if (x0 > s.w - 1) x0 = s.w - 1;
      int64_t x1 = x0 + 1 < s.w ? x0 + 1 : s.w - 1;
      const double wx = fx - static_cast<double>(x0);
      for (int64_t n = 0; n < s.n; ++n)
        for (int64_t c = 0; c < s.c; ++c) {
          const float* plane = in + (n * s.c + c) * s.h * s.w;
          double top = (1.0 - wx) * plane[y0 * s.w + x0] + wx * plane[y0 * s.w + x1];
          double bot = (1.0 - wx) * plane[y1 * s.w + x0] + wx * plane[y1 * s.w + x1];
          po[((n * s.c + c) * out_h + y) * out_w + x] =
              static_cast<float>((1.0 - wy) * top + wy * bot);
        }
    }
  }
  return out;
}

LabelMap resize_mask(const LabelMap& map, int64_t out_h, int64_t out_w) {
  if (out_h < 1 || out_w < 1) throw ShapeError("resize_mask: empty target");
  if (map.h == out_h && map.w == out_w) return map;
  LabelMap out;
  out.h = out_h;
  out.w = out_w;
  out.taxonomy = map.taxonomy;
  out.data.resize(static_cast<size_t>(out_h * out_w));
  const double sy = static_cast<double>(map.h) / static_cast<double>(out_h);
  const double sx = static_cast<double>(map.w) / static_cast<double>(out_w);
  for (int64_t y = 0; y < out_h; ++y) {
    int64_t yi = static_cast<int64_t>((static_cast<double>(y) + 0.5) * sy);
    if (yi > map.h - 1) yi = map.h - 1;
    for (int64_t x = 0; x < out_w; ++x) {
      int64_t xi = static_cast<int64_t>((static_cast<double>(x) + 0.5) * sx);
      if (xi > map.w - 1) xi = map.w - 1;
      out.at(y, x) = map.at(yi, xi);
    }
  }
  return out;
}

Tensor<float> hflip_image(const Tensor<float>& img) {
  const Shape& s = img.shape();
  auto out = Tensor<float>::zeros(s);
  const float* in = img.data();
  float* po = out.data();
  for (int64_t n = 0; n < s.n; ++n)
    for (int64_t c = 0; c < s.c; ++c)
      for (int64_t y = 0; y < s.h; ++y) {
        const float* row = in + ((n * s.c + c) * s.h + y) * s.w;
        float* orow = po + ((n * s.c + c) * s.h + y) * s.w;
        for (int64_t x = 0; x < s.w; ++x) orow[x] = row[s.w - 1 - x];
      }
  return out;
}

LabelMap hflip_mask(const LabelMap& map) {
  LabelMap out = map;
  for (int64_t y = 0; y < map.h; ++y)
    for (int64_t x = 0; x < map.w; ++x) out.at(y, x) = map.at(y, map.w - 1 - x);
  return out;
}

Tensor<float> crop_image(const Tensor<float>& img, int64_t top, int64_t left, int64_t h,
                         int64_t w) {
  const Shape& s = img.shape();
  if (top < 0 || left < 0 || top + h > s.h || left + w > s.w) {
    throw ShapeError("crop_image: window exceeds source " + s.str());
  }
  auto out = Tensor<float>::zeros({s.n, s.c, h, w});
  const float* in = img.data();
  float* po = out.data();
  for (int64_t n = 0; n < s.n; ++n)
    for (int64_t c = 0; c < s.c; ++c)
      for (int64_t y = 0; y < h; ++y) {
        const float* row = in + ((n * s.c + c) * s.h + top + y) * s.w + left;
        float* orow = po + ((n * s.c + c) * h + y) * w;
        for (int64_t x = 0; x < w; ++x) orow[x] = row[x];
      }
  return out;
}

LabelMap crop_mask(const LabelMap& map, int64_t top, int64_t left, int64_t h, int64_t w) {
  if (top < 0 || left < 0 || top + h > map.h || left + w > map.w) {
    throw ShapeError("crop_mask: window exceeds source");
  }
  LabelMap out;
  out.h = h;
  out.w = w;
  out.taxonomy = map.taxonomy;
  out.data.resize(static_cast<size_t>(h * w));
  for (int64_t y = 0; y < h; ++y)
    for (int64_t x = 0; x < w; ++x) out.at(y, x) = map.at(top + y, left + x);
  return out;
}

const std::array<CropSpec, 10>& ten_crop_specs() {
  constexpr int64_t kE = 256 - 224;      // far-edge offset
  constexpr int64_t kC = (256 - 224) / 2;  // center offset
  static const std::array<CropSpec, 10> specs = {{
      {0, 0, false},   // TL
      {0, kE, false},  // TR
      {kE, 0, false},  // BL
      {kE, kE, false}, // BR
      {kC, kC, false}, // Center
      {0, 0, true},    // TL flipped
      {0, kE, true},
      {kE, 0, true},
      {kE, kE, true},
      {kC, kC, true},
  }};
  return specs;
}

std::vector<CropPair> ten_crop(const Tensor<float>& img, const LabelMap& mask) {
  const Shape& s = img.shape();
  constexpr int64_t kSrc = 256, kCrop = 224;
  if (s.h != kSrc || s.w != kSrc || mask.h != kSrc || mask.w != kSrc) {
    throw ShapeError("ten_crop: expected 256x256 image and mask, got image " + s.str() +
                     ", mask " + std::to_string(mask.h) + "x" + std::to_string(mask.w));
  }
  std::vector<CropPair> out;
  out.reserve(10);
  for (const CropSpec& cs : ten_crop_specs()) {
    CropPair pair{crop_image(img, cs.top, cs.left, kCrop, kCrop),
                  crop_mask(mask, cs.top, cs.left, kCrop, kCrop)};
    if (cs.flip) {
      pair.image = hflip_image(pair.image);
      pair.mask = hflip_mask(pair.mask);
    }
    out.push_back(std::move(pair));
  }
  return out;
}

Tensor<float> one_hot(const LabelMap& map, int64_t num_classes) {
  map.validate("one_hot");
  if (map.taxonomy.size() > num_classes) {
    throw ContractError("one_hot: taxonomy " + map.taxonomy.str() + " exceeds " +
                        std::to_string(num_classes) + " classes");
  }
  auto out = Tensor<float>::zeros({1, num_classes, map.h, map.w});
  float* po = out.data();
  const int64_t sp = map.h * map.w;
  for (int64_t p = 0; p < sp; ++p) po[map.data[static_cast<size_t>(p)] * sp + p] = 1.0f;
  return out;
}

}  // namespace lapseg
