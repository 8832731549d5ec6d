#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "error.hpp"

namespace lapseg {

enum class TaxonomyKind { Full19, Single9, Generic };

// A dense, 0-based class index space. full19 is the dataset's native label
// set; single9 collapses instruments and fluids; generic(n) is an anonymous
// n-class space for synthetic data.
class Taxonomy {
 public:
  static Taxonomy full19();
  static Taxonomy single9();
  static Taxonomy generic(int64_t n);
  static Taxonomy from_string(const std::string& name, int64_t generic_classes = 0);

  TaxonomyKind kind() const { return kind_; }
  int64_t size() const { return static_cast<int64_t>(names_.size()); }
  const std::string& name(int64_t index) const;
  const std::vector<std::string>& names() const { return names_; }
  std::string str() const;

  bool operator==(const Taxonomy& o) const {
    return kind_ == o.kind_ && names_.size() == o.names_.size();
  }

 private:
  Taxonomy(TaxonomyKind kind, std::vector<std::string> names)
      : kind_(kind), names_(std::move(names)) {}
  TaxonomyKind kind_;
  std::vector<std::string> names_;
};

// Per-pixel class indices plus the taxonomy they index into.
struct LabelMap {
  int64_t h = 0;
  int64_t w = 0;
  std::vector<int32_t> data;
  Taxonomy taxonomy = Taxonomy::full19();

  int32_t at(int64_t y, int64_t x) const { return data[static_cast<size_t>(y * w + x)]; }
  int32_t& at(int64_t y, int64_t x) { return data[static_cast<size_t>(y * w + x)]; }

  void validate(const std::string& who) const;
};

// The single-instrument merge: all nine instrument classes fold into
// Instruments, Bile and Blood fold into Gallbladder, everything else keeps
// its identity.
LabelMap remap_to_single9(const LabelMap& map);

// The full19 -> single9 index table underlying remap_to_single9.
const std::array<int32_t, 19>& single9_merge_table();

// Class index <-> RGB color, used to decode and render color-coded masks.
struct Palette {
  struct Entry {
    int32_t index;
    std::string name;
    std::array<uint8_t, 3> rgb;
  };
  std::vector<Entry> entries;

  static Palette load(const std::string& path);
  static Palette defaults(const Taxonomy& taxonomy);
  void save(const std::string& path) const;

  // Validated lookup tables; both directions must be unique.
  void validate() const;
  int32_t index_of(const std::array<uint8_t, 3>& rgb) const;  // -1 when absent
  const std::array<uint8_t, 3>& rgb_of(int32_t index) const;  // throws when absent
};

}  // namespace lapseg
