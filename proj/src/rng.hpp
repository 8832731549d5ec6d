#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace lapseg {

// Seeded RNG with hand-rolled uniform/normal transforms so that sampled
// sequences depend only on the mt19937_64 stream, not on the standard
// library's distribution implementations.
class Rng {
 public:
  explicit Rng(uint64_t seed = 0) : eng_(seed) {}

  void reseed(uint64_t seed) { eng_.seed(seed); }

  uint64_t next_u64() { return eng_(); }

  // Uniform in [0, 1).
  double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

  // Uniform integer in [0, n).
  uint64_t uniform_int(uint64_t n) {
    // Rejection sampling keeps the draw unbiased.
    uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    uint64_t v;
    do {
      v = eng_();
    } while (v >= limit);
    return v % n;
  }

  // Standard normal via Box-Muller; one value per call, pair cached.
  double normal() {
    if (has_cached_) {
      has_cached_ = false;
      return cached_;
    }
    double u1, u2;
    do {
      u1 = uniform();
    } while (u1 <= 0.0);
    u2 = uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    double a = 6.283185307179586476925286766559 * u2;
    cached_ = r * std::sin(a);
    has_cached_ = true;
    return r * std::cos(a);
  }

 private:
  std::mt19937_64 eng_;
  bool has_cached_ = false;
  double cached_ = 0.0;
};

}  // namespace lapseg
