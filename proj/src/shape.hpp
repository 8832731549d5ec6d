#pragma once

#include <cstdint>
#include <string>

namespace lapseg {

// Dense 4-D extent in (n, c, h, w) order, row-major.
struct Shape {
  int64_t n = 0;
  int64_t c = 0;
  int64_t h = 0;
  int64_t w = 0;

  int64_t elems() const { return n * c * h * w; }

  int64_t index(int64_t in, int64_t ic, int64_t ih, int64_t iw) const {
    return ((in * c + ic) * h + ih) * w + iw;
  }

  bool operator==(const Shape& o) const = default;

  bool is_scalar() const { return n == 1 && c == 1 && h == 1 && w == 1; }

  std::string str() const {
    return "(" + std::to_string(n) + "," + std::to_string(c) + "," + std::to_string(h) + "," +
           std::to_string(w) + ")";
  }
};

}  // namespace lapseg
