#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "taxonomy.hpp"
#include "tensor.hpp"

namespace lapseg {

// 8-bit PNM payload: P6 (channels=3) or P5 (channels=1), rows interleaved.
struct RawImage {
  int64_t h = 0;
  int64_t w = 0;
  int64_t channels = 0;
  int maxval = 255;
  std::vector<uint8_t> data;
};

RawImage read_pnm(const std::string& path);
void write_ppm(const std::string& path, int64_t h, int64_t w, const uint8_t* rgb);
void write_pgm(const std::string& path, int64_t h, int64_t w, const uint8_t* gray);

// RGB image as (1,3,h,w) floats scaled to [0,1].
Tensor<float> load_image(const std::string& path);
void save_image(const Tensor<float>& img, const std::string& path);  // values clamped to [0,1]

// Masks: P5 carries class indices directly; P6 requires a palette to decode.
// `load_mask` dispatches on the magic number.
LabelMap load_mask(const std::string& path, const Taxonomy& taxonomy,
                   const Palette* palette = nullptr);
void save_mask_indexed(const LabelMap& map, const std::string& path);
void save_mask_color(const LabelMap& map, const Palette& palette, const std::string& path);

}  // namespace lapseg
