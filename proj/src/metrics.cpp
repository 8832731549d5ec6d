#include "metrics.hpp"

#include <cmath>
#include <fstream>

#include "json.hpp"

namespace lapseg {

ConfusionMatrix::ConfusionMatrix(Taxonomy taxonomy)
    : taxonomy_(std::move(taxonomy)),
      counts_(static_cast<size_t>(taxonomy_.size() * taxonomy_.size()), 0) {}

void ConfusionMatrix::accumulate(const LabelMap& pred, const LabelMap& truth) {
  if (pred.h != truth.h || pred.w != truth.w) {
    throw ShapeError("confusion: prediction " + std::to_string(pred.h) + "x" +
                     std::to_string(pred.w) + " vs truth " + std::to_string(truth.h) + "x" +
                     std::to_string(truth.w));
  }
  if (!(pred.taxonomy == taxonomy_) || !(truth.taxonomy == taxonomy_)) {
    throw ContractError("confusion: taxonomy mismatch (" + pred.taxonomy.str() + ", " +
                        truth.taxonomy.str() + " vs " + taxonomy_.str() + ")");
  }
  pred.validate("confusion/pred");
  truth.validate("confusion/truth");
  const int64_t n = taxonomy_.size();
  for (size_t i = 0; i < pred.data.size(); ++i) {
    counts_[static_cast<size_t>(truth.data[i] * n + pred.data[i])] += 1;
  }
}

void ConfusionMatrix::add(int64_t truth, int64_t pred, uint64_t count) {
  const int64_t n = taxonomy_.size();
  if (truth < 0 || truth >= n || pred < 0 || pred >= n) {
    throw ContractError("confusion: class out of range");
  }
  counts_[static_cast<size_t>(truth * n + pred)] += count;
}

void ConfusionMatrix::merge(const ConfusionMatrix& other) {
  if (!(other.taxonomy_ == taxonomy_)) throw ContractError("confusion merge: taxonomy mismatch");
  for (size_t i = 0; i < counts_.size(); ++i) counts_[i] += other.counts_[i];
}

uint64_t ConfusionMatrix::at(int64_t truth, int64_t pred) const {
  return counts_[static_cast<size_t>(truth * taxonomy_.size() + pred)];
}

uint64_t ConfusionMatrix::total() const {
  uint64_t t = 0;
  for (uint64_t v : counts_) t += v;
  return t;
}

uint64_t ConfusionMatrix::tp(int64_t c) const { return at(c, c); }

uint64_t ConfusionMatrix::fp(int64_t c) const {
  uint64_t col = 0;
  for (int64_t g = 0; g < taxonomy_.size(); ++g) col += at(g, c);
  return col - tp(c);
}

uint64_t ConfusionMatrix::fn(int64_t c) const {
  uint64_t row = 0;
  for (int64_t p = 0; p < taxonomy_.size(); ++p) row += at(c, p);
  return row - tp(c);
}

MetricsReport compute_metrics(const ConfusionMatrix& cm, bool exclude_undefined) {
  MetricsReport rep;
  rep.taxonomy = cm.taxonomy().str();
  rep.total_pixels = cm.total();
  rep.undefined_excluded_from_mean = exclude_undefined;

  struct Sum {
    double acc = 0;
    int64_t defined = 0;
    void add(bool def, double v) {
      if (def) {
        acc += v;
        ++defined;
      }
    }
    double mean(int64_t n_all, bool exclude) const {
      if (exclude) return defined == 0 ? 0.0 : acc / static_cast<double>(defined);
      return n_all == 0 ? 0.0 : acc / static_cast<double>(n_all);
    }
  } siou, sp, sr, sf1;

  const int64_t n = cm.num_classes();
  for (int64_t c = 0; c < n; ++c) {
    const double tp = static_cast<double>(cm.tp(c));
    const double fp = static_cast<double>(cm.fp(c));
    const double fn = static_cast<double>(cm.fn(c));
    ClassMetrics m;
    m.name = cm.taxonomy().name(c);
    if (tp + fp + fn > 0) {
      m.iou_defined = true;
      m.iou = tp / (tp + fp + fn);
    }
    if (tp + fp > 0) {
      m.precision_defined = true;
      m.precision = tp / (tp + fp);
    }
    if (tp + fn > 0) {
      m.recall_defined = true;
      m.recall = tp / (tp + fn);
    }
    if (m.precision_defined && m.recall_defined) {
      m.f1_defined = true;
      m.f1 = (m.precision + m.recall) > 0
                 ? 2.0 * m.precision * m.recall / (m.precision + m.recall)
                 : 0.0;
    }
    siou.add(m.iou_defined, m.iou);
    sp.add(m.precision_defined, m.precision);
    sr.add(m.recall_defined, m.recall);
    sf1.add(m.f1_defined, m.f1);
    rep.per_class.push_back(std::move(m));
  }
  rep.mean_iou = siou.mean(n, exclude_undefined);
  rep.mean_precision = sp.mean(n, exclude_undefined);
  rep.mean_recall = sr.mean(n, exclude_undefined);
  rep.mean_f1 = sf1.mean(n, exclude_undefined);
  return rep;
}

double round2(double v) {
  // Half-up on the printed decimal value; the nudge keeps numbers that are
  // decimally exact halves (stored slightly low in binary) rounding up.
  return std::floor(v * 100.0 + 0.5 + 1e-9) / 100.0;
}

std::string format2(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", round2(v));
  return buf;
}

namespace {

nlohmann::json class_to_json(const ClassMetrics& m) {
  return {{"name", m.name},
          {"iou", m.iou},
          {"precision", m.precision},
          {"recall", m.recall},
          {"f1", m.f1},
          {"iou_defined", m.iou_defined},
          {"precision_defined", m.precision_defined},
          {"recall_defined", m.recall_defined},
          {"f1_defined", m.f1_defined},
          {"rounded",
           {{"iou", format2(m.iou)},
            {"precision", format2(m.precision)},
            {"recall", format2(m.recall)},
            {"f1", format2(m.f1)}}}};
}

ClassMetrics class_from_json(const nlohmann::json& j) {
  ClassMetrics m;
  m.name = j.at("name").get<std::string>();
  m.iou = j.at("iou").get<double>();
  m.precision = j.at("precision").get<double>();
  m.recall = j.at("recall").get<double>();
  m.f1 = j.at("f1").get<double>();
  m.iou_defined = j.at("iou_defined").get<bool>();
  m.precision_defined = j.at("precision_defined").get<bool>();
  m.recall_defined = j.at("recall_defined").get<bool>();
  m.f1_defined = j.at("f1_defined").get<bool>();
  return m;
}

}  // namespace

void emit_csv(const MetricsReport& report, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write report " + path);
  out << "class,iou,precision,recall,f1\n";
  char buf[256];
  for (const auto& m : report.per_class) {
    std::snprintf(buf, sizeof buf, "%s,%.10g,%.10g,%.10g,%.10g\n", m.name.c_str(), m.iou,
                  m.precision, m.recall, m.f1);
    out << buf;
  }
  std::snprintf(buf, sizeof buf, "Mean,%.10g,%.10g,%.10g,%.10g\n", report.mean_iou,
                report.mean_precision, report.mean_recall, report.mean_f1);
  out << buf;
  if (!out) throw IoError("short write to " + path);
}

void emit_json(const MetricsReport& report, const std::string& path) {
  nlohmann::json j;
  j["taxonomy"] = report.taxonomy;
  j["total_pixels"] = report.total_pixels;
  j["undefined_excluded_from_mean"] = report.undefined_excluded_from_mean;
  j["checkpoint_id"] = report.checkpoint_id;
  j["manifest_id"] = report.manifest_id;
  j["classes"] = nlohmann::json::array();
  for (const auto& m : report.per_class) j["classes"].push_back(class_to_json(m));
  j["mean"] = {{"iou", report.mean_iou},
               {"precision", report.mean_precision},
               {"recall", report.mean_recall},
               {"f1", report.mean_f1},
               {"rounded",
                {{"iou", format2(report.mean_iou)},
                 {"precision", format2(report.mean_precision)},
                 {"recall", format2(report.mean_recall)},
                 {"f1", format2(report.mean_f1)}}}};
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write report " + path);
  out << j.dump(2) << "\n";
}

MetricsReport report_from_json_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open report " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw DataError("report " + path + " is not valid JSON: " + e.what());
  }
  MetricsReport rep;
  rep.taxonomy = j.at("taxonomy").get<std::string>();
  rep.total_pixels = j.at("total_pixels").get<uint64_t>();
  rep.undefined_excluded_from_mean = j.at("undefined_excluded_from_mean").get<bool>();
  rep.checkpoint_id = j.value("checkpoint_id", "");
  rep.manifest_id = j.value("manifest_id", "");
  for (const auto& c : j.at("classes")) rep.per_class.push_back(class_from_json(c));
  rep.mean_iou = j.at("mean").at("iou").get<double>();
  rep.mean_precision = j.at("mean").at("precision").get<double>();
  rep.mean_recall = j.at("mean").at("recall").get<double>();
  rep.mean_f1 = j.at("mean").at("f1").get<double>();
  return rep;
}

LabelMap predict_labelmap(const Tensor<float>& probs, const Taxonomy& taxonomy) {
  const Shape& s = probs.shape();
  if (s.n != 1 || s.c != taxonomy.size()) {
    throw ShapeError("predict_labelmap: expected (1," + std::to_string(taxonomy.size()) +
                     ",h,w), got " + s.str());
  }
  LabelMap map;
  map.h = s.h;
  map.w = s.w;
  map.taxonomy = taxonomy;
  map.data.resize(static_cast<size_t>(s.h * s.w));
  const float* p = probs.data();
  const int64_t sp = s.h * s.w;
  for (int64_t i = 0; i < sp; ++i) {
    int32_t best = 0;
    float bv = p[i];
    for (int64_t c = 1; c < s.c; ++c) {
      float v = p[c * sp + i];
      if (v > bv) {  // strict: ties keep the lowest index
        bv = v;
        best = static_cast<int32_t>(c);
      }
    }
    map.data[static_cast<size_t>(i)] = best;
  }
  return map;
}

}  // namespace lapseg
