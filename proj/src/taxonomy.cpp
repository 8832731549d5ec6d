#include "taxonomy.hpp"

#include <fstream>
#include <sstream>

#include "json.hpp"

namespace lapseg {

Taxonomy Taxonomy::full19() {
  return Taxonomy(TaxonomyKind::Full19,
                  {"Unknown", "Grasper", "Bipolar", "Hook", "Scissors", "Clipper", "Irrigator",
                   "SpecimenBag", "Trocars", "Clip", "Liver", "Gallbladder", "Fat", "UpperWall",
                   "Intestine", "Artery", "Bile", "Blood", "Black"});
}

Taxonomy Taxonomy::single9() {
  return Taxonomy(TaxonomyKind::Single9, {"Unknown", "Instruments", "Liver", "Gallbladder", "Fat",
                                          "UpperWall", "Intestine", "Artery", "Black"});
}

Taxonomy Taxonomy::generic(int64_t n) {
  if (n < 2) throw ConfigError("generic taxonomy needs at least 2 classes, got " + std::to_string(n));
  std::vector<std::string> names;
  names.reserve(static_cast<size_t>(n));
  for (int64_t i = 0; i < n; ++i) names.push_back("class" + std::to_string(i));
  return Taxonomy(TaxonomyKind::Generic, std::move(names));
}

Taxonomy Taxonomy::from_string(const std::string& name, int64_t generic_classes) {
  if (name == "full19") return full19();
  if (name == "single9") return single9();
  if (name == "generic") return generic(generic_classes);
  throw ConfigError("unknown taxonomy '" + name + "' (expected full19, single9, or generic)");
}

const std::string& Taxonomy::name(int64_t index) const {
  if (index < 0 || index >= size()) {
    throw ContractError("taxonomy " + str() + " has no class " + std::to_string(index));
  }
  return names_[static_cast<size_t>(index)];
}

std::string Taxonomy::str() const {
  switch (kind_) {
    case TaxonomyKind::Full19:
      return "full19";
    case TaxonomyKind::Single9:
      return "single9";
    case TaxonomyKind::Generic:
      return "generic" + std::to_string(size());
  }
  return "?";
}

void LabelMap::validate(const std::string& who) const {
  if (h < 1 || w < 1 || static_cast<int64_t>(data.size()) != h * w) {
    throw ContractError(who + ": label map geometry " + std::to_string(h) + "x" +
                        std::to_string(w) + " with " + std::to_string(data.size()) + " pixels");
  }
  const int32_t n = static_cast<int32_t>(taxonomy.size());
  for (size_t i = 0; i < data.size(); ++i) {
    if (data[i] < 0 || data[i] >= n) {
      throw DataError(who + ": pixel " + std::to_string(i) + " has class " +
                      std::to_string(data[i]) + ", outside taxonomy " + taxonomy.str());
    }
  }
}

const std::array<int32_t, 19>& single9_merge_table() {
  // full19 index -> single9 index
  static const std::array<int32_t, 19> table = {
      0,  // Unknown      -> Unknown
      1,  // Grasper      -> Instruments
      1,  // Bipolar      -> Instruments
      1,  // Hook         -> Instruments
      1,  // Scissors     -> Instruments
      1,  // Clipper      -> Instruments
      1,  // Irrigator    -> Instruments
      1,  // SpecimenBag  -> Instruments
      1,  // Trocars      -> Instruments
      1,  // Clip         -> Instruments
      2,  // Liver        -> Liver
      3,  // Gallbladder  -> Gallbladder
      4,  // Fat          -> Fat
      5,  // UpperWall    -> UpperWall
      6,  // Intestine    -> Intestine
      7,  // Artery       -> Artery
      3,  // Bile         -> Gallbladder
      3,  // Blood        -> Gallbladder
      8,  // Black        -> Black
  };
  return table;
}

LabelMap remap_to_single9(const LabelMap& map) {
  if (map.taxonomy.kind() != TaxonomyKind::Full19) {
    throw ContractError("remap_to_single9: source taxonomy is " + map.taxonomy.str() +
                        ", expected full19");
  }
  map.validate("remap_to_single9");
  const auto& table = single9_merge_table();
  LabelMap out;
  out.h = map.h;
  out.w = map.w;
  out.taxonomy = Taxonomy::single9();
  out.data.resize(map.data.size());
  for (size_t i = 0; i < map.data.size(); ++i)
    out.data[i] = table[static_cast<size_t>(map.data[i])];
  return out;
}

void Palette::validate() const {
  for (size_t i = 0; i < entries.size(); ++i) {
    for (size_t j = i + 1; j < entries.size(); ++j) {
      if (entries[i].index == entries[j].index) {
        throw DataError("palette: duplicate class index " + std::to_string(entries[i].index));
      }
      if (entries[i].rgb == entries[j].rgb) {
        throw DataError("palette: classes " + std::to_string(entries[i].index) + " and " +
                        std::to_string(entries[j].index) + " share one color");
      }
    }
    if (entries[i].index < 0) throw DataError("palette: negative class index");
  }
}

int32_t Palette::index_of(const std::array<uint8_t, 3>& rgb) const {
  for (const auto& e : entries)
    if (e.rgb == rgb) return e.index;
  return -1;
}

const std::array<uint8_t, 3>& Palette::rgb_of(int32_t index) const {
  for (const auto& e : entries)
    if (e.index == index) return e.rgb;
  throw DataError("palette: no color for class " + std::to_string(index));
}

Palette Palette::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open palette file " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw DataError("palette " + path + " is not valid JSON: " + e.what());
  }
  if (!j.is_array()) throw DataError("palette " + path + ": expected a JSON array");
  Palette p;
  for (const auto& item : j) {
    if (!item.contains("index") || !item.contains("rgb") || !item["rgb"].is_array() ||
        item["rgb"].size() != 3) {
      throw DataError("palette " + path + ": entries need {index, name, rgb:[r,g,b]}");
    }
    Entry e;
    e.index = item["index"].get<int32_t>();
    e.name = item.value("name", "class" + std::to_string(e.index));
    for (int k = 0; k < 3; ++k) {
      int v = item["rgb"][static_cast<size_t>(k)].get<int>();
      if (v < 0 || v > 255) throw DataError("palette " + path + ": rgb component out of range");
      e.rgb[static_cast<size_t>(k)] = static_cast<uint8_t>(v);
    }
    p.entries.push_back(std::move(e));
  }
  p.validate();
  return p;
}

void Palette::save(const std::string& path) const {
  nlohmann::json j = nlohmann::json::array();
  for (const auto& e : entries) {
    j.push_back({{"index", e.index},
                 {"name", e.name},
                 {"rgb", {e.rgb[0], e.rgb[1], e.rgb[2]}}});
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write palette file " + path);
  out << j.dump(2) << "\n";
}

Palette Palette::defaults(const Taxonomy& taxonomy) {
  // Fixed, distinct colors: black and white bookend the id range, the rest
  // walk a coarse RGB lattice so neighbors stay far apart.
  static const std::array<std::array<uint8_t, 3>, 19> base = {{
      {255, 255, 255},  // 0
      {230, 25, 75},    // 1
      {60, 180, 75},    // 2
      {255, 225, 25},   // 3
      {0, 130, 200},    // 4
      {245, 130, 48},   // 5
      {145, 30, 180},   // 6
      {70, 240, 240},   // 7
      {240, 50, 230},   // 8
      {210, 245, 60},   // 9
      {250, 190, 212},  // 10
      {0, 128, 128},    // 11
      {220, 190, 255},  // 12
      {170, 110, 40},   // 13
      {255, 250, 200},  // 14
      {128, 0, 0},      // 15
      {170, 255, 195},  // 16
      {128, 128, 0},    // 17
      {0, 0, 0},        // 18
  }};
  Palette p;
  const int64_t n = taxonomy.size();
  if (n > static_cast<int64_t>(base.size())) {
    throw ConfigError("default palette covers at most 19 classes, taxonomy has " +
                      std::to_string(n) + "; provide a palette file");
  }
  for (int64_t i = 0; i < n; ++i) {
    Entry e;
    e.index = static_cast<int32_t>(i);
    e.name = taxonomy.name(i);
    // Black is always the last class in the built-in taxonomies.
    e.rgb = (i == n - 1 && taxonomy.kind() != TaxonomyKind::Generic)
                ? std::array<uint8_t, 3>{0, 0, 0}
                : base[static_cast<size_t>(i)];
    p.entries.push_back(std::move(e));
  }
  p.validate();
  return p;
}

}  // namespace lapseg
