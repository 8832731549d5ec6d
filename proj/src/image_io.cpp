#include "image_io.hpp"

#include <cctype>
#include <fstream>

namespace lapseg {

namespace {

// Reads one whitespace-delimited PNM header token, skipping '#' comments.
std::string next_token(std::istream& in, const std::string& path) {
  std::string tok;
  int c;
  while ((c = in.get()) != EOF) {
    if (c == '#') {
      while ((c = in.get()) != EOF && c != '\n') {
      }
      continue;
    }
    if (std::isspace(c)) {
      if (!tok.empty()) return tok;
      continue;
    }
    tok.push_back(static_cast<char>(c));
  }
  if (tok.empty()) throw DataError(path + ": truncated PNM header");
  return tok;
}

int64_t parse_dim(const std::string& tok, const std::string& path, const char* what) {
  try {
    size_t pos = 0;
    long long v = std::stoll(tok, &pos);
    if (pos != tok.size() || v < 1) throw std::invalid_argument(tok);
    return v;
  } catch (const std::exception&) {
    throw DataError(path + ": bad PNM " + what + " '" + tok + "'");
  }
}

void write_pnm(const std::string& path, const char* magic, int64_t h, int64_t w,
               int64_t channels, const uint8_t* data) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path);
  out << magic << "\n" << w << " " << h << "\n255\n";
  out.write(reinterpret_cast<const char*>(data),
            static_cast<std::streamsize>(h * w * channels));
  if (!out) throw IoError("short write to " + path);
}

}  // namespace

RawImage read_pnm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::string magic = next_token(in, path);
  RawImage img;
  if (magic == "P6") {
    img.channels = 3;
  } else if (magic == "P5") {
    img.channels = 1;
  } else {
    throw DataError(path + ": unsupported PNM magic '" + magic + "' (expected P5 or P6)");
  }
  img.w = parse_dim(next_token(in, path), path, "width");
  img.h = parse_dim(next_token(in, path), path, "height");
  int64_t maxval = parse_dim(next_token(in, path), path, "maxval");
  if (maxval > 255) {
    throw DataError(path + ": 16-bit PNM (maxval " + std::to_string(maxval) +
                    ") is not supported");
  }
  img.maxval = static_cast<int>(maxval);
  // The header's final whitespace byte was consumed by the token reader.
  size_t n = static_cast<size_t>(img.h * img.w * img.channels);
  img.data.resize(n);
  in.read(reinterpret_cast<char*>(img.data.data()), static_cast<std::streamsize>(n));
  if (static_cast<size_t>(in.gcount()) != n) {
    throw DataError(path + ": truncated pixel data (" + std::to_string(in.gcount()) + " of " +
                    std::to_string(n) + " bytes)");
  }
  return img;
}

void write_ppm(const std::string& path, int64_t h, int64_t w, const uint8_t* rgb) {
  write_pnm(path, "P6", h, w, 3, rgb);
}

void write_pgm(const std::string& path, int64_t h, int64_t w, const uint8_t* gray) {
  write_pnm(path, "P5", h, w, 1, gray);
}

Tensor<float> load_image(const std::string& path) {
  RawImage raw = read_pnm(path);
  if (raw.channels != 3) throw DataError(path + ": expected a P6 color image");
  auto img = Tensor<float>::zeros({1, 3, raw.h, raw.w});
  float* out = img.data();
  const int64_t sp = raw.h * raw.w;
  const float scale = 1.0f / static_cast<float>(raw.maxval);
  for (int64_t p = 0; p < sp; ++p)
    for (int64_t c = 0; c < 3; ++c)
      out[c * sp + p] = static_cast<float>(raw.data[static_cast<size_t>(p * 3 + c)]) * scale;
  return img;
}

void save_image(const Tensor<float>& img, const std::string& path) {
  const Shape& s = img.shape();
  if (s.n != 1 || s.c != 3) throw ContractError("save_image: expected (1,3,h,w), got " + s.str());
  const int64_t sp = s.h * s.w;
  std::vector<uint8_t> bytes(static_cast<size_t>(sp * 3));
  const float* in = img.data();
  for (int64_t p = 0; p < sp; ++p)
    for (int64_t c = 0; c < 3; ++c) {
      float v = in[c * sp + p];
      v = v < 0.0f ? 0.0f : (v > 1.0f ? 1.0f : v);
      bytes[static_cast<size_t>(p * 3 + c)] = static_cast<uint8_t>(v * 255.0f + 0.5f);
    }
  write_ppm(path, s.h, s.w, bytes.data());
}

LabelMap load_mask(const std::string& path, const Taxonomy& taxonomy, const Palette* palette) {
  RawImage raw = read_pnm(path);
  LabelMap map;
  map.h = raw.h;
  map.w = raw.w;
  map.taxonomy = taxonomy;
  map.data.resize(static_cast<size_t>(raw.h * raw.w));
  if (raw.channels == 1) {
    for (size_t i = 0; i < map.data.size(); ++i) map.data[i] = raw.data[i];
  } else {
    if (!palette) {
      throw DataError(path + ": color mask needs a palette to decode");
    }
    for (int64_t p = 0; p < raw.h * raw.w; ++p) {
      std::array<uint8_t, 3> rgb = {raw.data[static_cast<size_t>(p * 3)],
                                    raw.data[static_cast<size_t>(p * 3 + 1)],
                                    raw.data[static_cast<size_t>(p * 3 + 2)]};
      int32_t idx = palette->index_of(rgb);
      if (idx < 0) {
        throw DataError(path + ": pixel (" + std::to_string(p / raw.w) + "," +
                        std::to_string(p % raw.w) + ") has color rgb(" + std::to_string(rgb[0]) +
                        "," + std::to_string(rgb[1]) + "," + std::to_string(rgb[2]) +
                        ") not present in the palette");
      }
      map.data[static_cast<size_t>(p)] = idx;
    }
  }
  map.validate(path);
  return map;
}

void save_mask_indexed(const LabelMap& map, const std::string& path) {
  map.validate("save_mask_indexed");
  if (map.taxonomy.size() > 256) {
    throw ContractError("save_mask_indexed: taxonomy too large for 8-bit PGM");
  }
  std::vector<uint8_t> bytes(map.data.size());
  for (size_t i = 0; i < bytes.size(); ++i) bytes[i] = static_cast<uint8_t>(map.data[i]);
  write_pgm(path, map.h, map.w, bytes.data());
}

void save_mask_color(const LabelMap& map, const Palette& palette, const std::string& path) {
  map.validate("save_mask_color");
  std::vector<uint8_t> bytes(map.data.size() * 3);
  for (size_t i = 0; i < map.data.size(); ++i) {
    const auto& rgb = palette.rgb_of(map.data[i]);
    bytes[i * 3] = rgb[0];
    bytes[i * 3 + 1] = rgb[1];
    bytes[i * 3 + 2] = rgb[2];
  }
  write_ppm(path, map.h, map.w, bytes.data());
}

}  // namespace lapseg
