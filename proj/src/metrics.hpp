#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "taxonomy.hpp"
#include "tensor.hpp"

namespace lapseg {

// Pixel-count matrix M[truth][pred]. Accumulation is order-independent and
// matrices merge by plain summation.
class ConfusionMatrix {
 public:
  explicit ConfusionMatrix(Taxonomy taxonomy);

  void accumulate(const LabelMap& pred, const LabelMap& truth);
  void add(int64_t truth, int64_t pred, uint64_t count);
  void merge(const ConfusionMatrix& other);

  uint64_t at(int64_t truth, int64_t pred) const;
  uint64_t total() const;
  uint64_t tp(int64_t c) const;
  uint64_t fp(int64_t c) const;
  uint64_t fn(int64_t c) const;

  int64_t num_classes() const { return taxonomy_.size(); }
  const Taxonomy& taxonomy() const { return taxonomy_; }

 private:
  Taxonomy taxonomy_;
  std::vector<uint64_t> counts_;
};

// One class row of the report. A metric is undefined when its own
// denominator is zero; undefined F1 means precision or recall is undefined.
struct ClassMetrics {
  std::string name;
  double iou = 0, precision = 0, recall = 0, f1 = 0;
  bool iou_defined = false, precision_defined = false, recall_defined = false,
       f1_defined = false;
};

struct MetricsReport {
  std::string taxonomy;
  std::vector<ClassMetrics> per_class;
  double mean_iou = 0, mean_precision = 0, mean_recall = 0, mean_f1 = 0;
  uint64_t total_pixels = 0;
  bool undefined_excluded_from_mean = false;
  std::string checkpoint_id, manifest_id;  // provenance
};

// Per-class IoU/P/R/F1 plus means. Undefined entries contribute 0 to the
// means by default; pass exclude_undefined to average defined classes only.
MetricsReport compute_metrics(const ConfusionMatrix& cm, bool exclude_undefined = false);

// Display rounding: half-up to two decimals (0.845 -> 0.85).
double round2(double v);
std::string format2(double v);  // fixed 2-decimal string

void emit_csv(const MetricsReport& report, const std::string& path);
void emit_json(const MetricsReport& report, const std::string& path);
MetricsReport report_from_json_file(const std::string& path);

// Argmax decode of a (1,NC,h,w) probability tensor; ties break toward the
// lowest class index.
LabelMap predict_labelmap(const Tensor<float>& probs, const Taxonomy& taxonomy);

}  // namespace lapseg
