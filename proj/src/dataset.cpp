#include "dataset.hpp"

#include <filesystem>
#include <fstream>

#include "image_io.hpp"
#include "json.hpp"

namespace lapseg {

std::vector<ManifestEntry> load_manifest(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open manifest " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw DataError("manifest " + path + " is not valid JSON: " + e.what());
  }
  if (!j.is_array()) throw DataError("manifest " + path + ": expected a JSON array");
  const auto base = std::filesystem::path(path).parent_path();
  auto resolve = [&](const std::string& p) {
    std::filesystem::path fp(p);
    return fp.is_absolute() ? fp.string() : (base / fp).lexically_normal().string();
  };
  std::vector<ManifestEntry> entries;
  for (const auto& item : j) {
    if (!item.is_object() || !item.contains("image")) {
      throw DataError("manifest " + path + ": entries must be {image, mask?} objects");
    }
    ManifestEntry e;
    e.image = resolve(item["image"].get<std::string>());
    if (item.contains("mask") && !item["mask"].is_null()) {
      e.mask = resolve(item["mask"].get<std::string>());
    }
    entries.push_back(std::move(e));
  }
  return entries;
}

DatasetIter::DatasetIter(std::vector<ManifestEntry> entries, DatasetOptions opts)
    : entries_(std::move(entries)), opts_(std::move(opts)) {
  if (opts_.batch_size < 1) throw ConfigError("dataset: batch_size must be >= 1");
  if (opts_.segmentation && opts_.num_classes < 2) {
    throw ConfigError("dataset: segmentation needs num_classes >= 2");
  }
  if (opts_.augment && opts_.input_size != 256) {
    throw ConfigError("dataset: 10-crop augmentation requires input_size 256");
  }
  if (opts_.segmentation) {
    for (const auto& e : entries_) {
      if (e.mask.empty()) {
        throw DataError("dataset: manifest entry for " + e.image + " has no mask");
      }
    }
  }
  cache_.resize(8);
  reset(opts_.shuffle_seed);
}

int64_t DatasetIter::batches_per_epoch() const {
  return (samples_per_epoch() + opts_.batch_size - 1) / opts_.batch_size;
}

void DatasetIter::reset(uint64_t shuffle_seed) {
  order_.clear();
  const int64_t crops = opts_.augment ? 10 : 1;
  for (int64_t e = 0; e < static_cast<int64_t>(entries_.size()); ++e) {
    for (int64_t c = 0; c < crops; ++c) {
      order_.push_back({e, opts_.augment ? c : int64_t{-1}});
    }
  }
  if (opts_.shuffle) {
    Rng rng(shuffle_seed);
    for (size_t i = order_.size(); i > 1; --i) {
      size_t j = static_cast<size_t>(rng.uniform_int(i));
      std::swap(order_[i - 1], order_[j]);
    }
  }
  cursor_ = 0;
}

const DatasetIter::Decoded& DatasetIter::decoded(int64_t entry_idx) {
  for (const auto& slot : cache_) {
    if (slot.entry == entry_idx) return slot.value;
  }
  const ManifestEntry& e = entries_[static_cast<size_t>(entry_idx)];
  Decoded d;
  const int64_t target = opts_.augment ? 256 : opts_.input_size;
  try {
    d.image = resize_image(load_image(e.image), target, target);
    if (opts_.segmentation) {
      LabelMap m = load_mask(e.mask, opts_.taxonomy,
                             opts_.palette ? &*opts_.palette : nullptr);
      d.mask = resize_mask(m, target, target);
      d.has_mask = true;
    }
  } catch (const Error& err) {
    if (err.kind() == ErrorKind::Config || err.kind() == ErrorKind::Contract) throw;
    throw DataError("dataset pair (" + e.image + ", " + (e.mask.empty() ? "-" : e.mask) +
                    "): " + err.what());
  }
  CacheSlot& slot = cache_[cache_next_];
  cache_next_ = (cache_next_ + 1) % cache_.size();
  slot.entry = entry_idx;
  slot.value = std::move(d);
  return slot.value;
}

void DatasetIter::sample_into(const Sample& s, Tensor<float>& raw_img, LabelMap& mask,
                              bool want_mask) {
  const Decoded& d = decoded(s.entry);
  if (s.crop < 0) {
    raw_img = d.image;
    if (want_mask) mask = d.mask;
    return;
  }
  const CropSpec& cs = ten_crop_specs()[static_cast<size_t>(s.crop)];
  raw_img = crop_image(d.image, cs.top, cs.left, 224, 224);
  if (cs.flip) raw_img = hflip_image(raw_img);
  if (want_mask) {
    mask = crop_mask(d.mask, cs.top, cs.left, 224, 224);
    if (cs.flip) mask = hflip_mask(mask);
  }
}

bool DatasetIter::next(Batch& out) {
  if (cursor_ >= samples_per_epoch()) return false;
  const int64_t remaining = samples_per_epoch() - cursor_;
  const int64_t b = remaining < opts_.batch_size ? remaining : opts_.batch_size;
  const int64_t hw = opts_.augment ? 224 : opts_.input_size;
  const int64_t tc = opts_.segmentation ? opts_.num_classes : 3;

  out.size = b;
  out.images = Tensor<float>::zeros({b, 3, hw, hw});
  out.targets = Tensor<float>::zeros({b, tc, hw, hw});

  const int64_t img_elems = 3 * hw * hw;
  const int64_t tgt_elems = tc * hw * hw;
  for (int64_t i = 0; i < b; ++i) {
    const Sample& s = order_[static_cast<size_t>(cursor_ + i)];
    Tensor<float> raw;
    LabelMap mask;
    sample_into(s, raw, mask, opts_.segmentation);
    Tensor<float> norm = normalize(raw, opts_.stats);
    std::copy(norm.data(), norm.data() + img_elems, out.images.data() + i * img_elems);
    if (opts_.segmentation) {
      if (mask.taxonomy.size() > opts_.num_classes) {
        const ManifestEntry& e = entries_[static_cast<size_t>(s.entry)];
        throw DataError("dataset pair (" + e.image + ", " + e.mask + "): mask taxonomy " +
                        mask.taxonomy.str() + " exceeds num_classes " +
                        std::to_string(opts_.num_classes));
      }
      Tensor<float> oh = one_hot(mask, opts_.num_classes);
      std::copy(oh.data(), oh.data() + tgt_elems, out.targets.data() + i * tgt_elems);
    } else {
      std::copy(raw.data(), raw.data() + img_elems, out.targets.data() + i * img_elems);
    }
  }
  cursor_ += b;
  return true;
}

}  // namespace lapseg
