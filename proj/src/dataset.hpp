#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "rng.hpp"
#include "taxonomy.hpp"
#include "tensor.hpp"
#include "transforms.hpp"

namespace lapseg {

// One manifest row. `mask` stays empty for unlabeled (reconstruction/stats)
// manifests. Paths are absolute after loading.
struct ManifestEntry {
  std::string image;
  std::string mask;
};

// JSON array of {image, mask?}; relative paths resolve against the
// manifest's own directory.
std::vector<ManifestEntry> load_manifest(const std::string& path);

struct DatasetOptions {
  int64_t batch_size = 2;
  bool augment = false;       // 10-crop 224s out of resized 256s
  bool segmentation = true;   // false: targets are the raw [0,1] images
  int64_t num_classes = 0;    // one-hot depth for segmentation
  int64_t input_size = 256;   // resize target on the non-augmented path
  bool shuffle = true;
  uint64_t shuffle_seed = 0;
  NormalizationStats stats;
  Taxonomy taxonomy = Taxonomy::full19();
  std::optional<Palette> palette;  // for color-coded masks
};

struct Batch {
  Tensor<float> images;   // (B,3,H,W), normalized
  Tensor<float> targets;  // one-hot (B,NC,H,W) or raw images (B,3,H,W)
  int64_t size = 0;
};

// Epoch iterator: expands each pair into its crops (when augmenting),
// shuffles sample order as a pure function of the seed, and assembles
// normalized image / target batches. The final short batch is yielded.
class DatasetIter {
 public:
  DatasetIter(std::vector<ManifestEntry> entries, DatasetOptions opts);

  int64_t samples_per_epoch() const { return static_cast<int64_t>(order_.size()); }
  int64_t batches_per_epoch() const;

  // Fills `out`; false once the epoch is exhausted.
  bool next(Batch& out);

  // Rewinds and reshuffles for a new epoch.
  void reset(uint64_t shuffle_seed);

 private:
  struct Sample {
    int64_t entry;
    int64_t crop;  // -1: whole image; 0..9: ten-crop index
  };
  struct Decoded {
    Tensor<float> image;  // raw [0,1], resized
    LabelMap mask;
    bool has_mask = false;
  };

  const Decoded& decoded(int64_t entry_idx);
  void sample_into(const Sample& s, Tensor<float>& raw_img, LabelMap& mask, bool want_mask);

  std::vector<ManifestEntry> entries_;
  DatasetOptions opts_;
  std::vector<Sample> order_;
  int64_t cursor_ = 0;

  // Small decode cache; shuffled crop access revisits source pairs often.
  struct CacheSlot {
    int64_t entry = -1;
    Decoded value;
  };
  std::vector<CacheSlot> cache_;
  size_t cache_next_ = 0;
};

}  // namespace lapseg
