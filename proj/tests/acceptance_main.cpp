// End-to-end acceptance checks. Each check prints one PASS/FAIL line; the
// process exits nonzero if any fail. Run through ctest or directly.
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <string>
#include <vector>

#include "audit.hpp"
#include "checkpoint.hpp"
#include "conv.hpp"
#include "dataset.hpp"
#include "image_io.hpp"
#include "json.hpp"
#include "metrics.hpp"
#include "model.hpp"
#include "rng.hpp"
#include "runconfig.hpp"
#include "runner.hpp"
#include "taxonomy.hpp"
#include "transforms.hpp"

using namespace lapseg;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double secs_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

struct Outcome {
  bool pass = false;
  std::string detail;
};

// ---------------------------------------------------------------- fixtures

Tensor<double> randn(const Shape& s, Rng& rng) {
  auto t = Tensor<double>::zeros(s);
  for (int64_t i = 0; i < t.size(); ++i) t.data()[i] = rng.normal();
  return t;
}

double dot(const Tensor<double>& a, const Tensor<double>& b) {
  double acc = 0;
  for (int64_t i = 0; i < a.size(); ++i) acc += a.data()[i] * b.data()[i];
  return acc;
}

// Three vertical color bands; the mask is the band index.
void write_pair(const fs::path& img_path, const fs::path& mask_path, int variant) {
  const int64_t s = 64;
  auto img = Tensor<float>::zeros({1, 3, s, s});
  LabelMap mask;
  mask.h = mask.w = s;
  mask.taxonomy = Taxonomy::generic(3);
  mask.data.resize(static_cast<size_t>(s * s));
  for (int64_t y = 0; y < s; ++y) {
    for (int64_t x = 0; x < s; ++x) {
      const int band = static_cast<int>(x / 22);
      mask.at(y, x) = band;
      for (int64_t c = 0; c < 3; ++c) {
        const float base = (c == band) ? 0.85f : 0.15f;
        img.data()[(c * s + y) * s + x] = base + 0.02f * static_cast<float>(variant);
      }
    }
  }
  save_image(img, img_path.string());
  save_mask_indexed(mask, mask_path.string());
}

struct Corpus {
  fs::path dir;
  std::string img_manifest, seg_manifest;
  std::vector<std::string> images, masks;
};

Corpus write_corpus(const std::string& name) {
  Corpus c;
  c.dir = fs::temp_directory_path() / "lapseg_acceptance" / name;
  fs::remove_all(c.dir);
  fs::create_directories(c.dir);
  nlohmann::json imgs = nlohmann::json::array();
  nlohmann::json pairs = nlohmann::json::array();
  for (int i = 0; i < 4; ++i) {
    const std::string img = "i" + std::to_string(i) + ".ppm";
    const std::string mask = "m" + std::to_string(i) + ".pgm";
    write_pair(c.dir / img, c.dir / mask, i);
    c.images.push_back((c.dir / img).string());
    c.masks.push_back((c.dir / mask).string());
    imgs.push_back({{"image", img}});
    pairs.push_back({{"image", img}, {"mask", mask}});
  }
  c.img_manifest = (c.dir / "images.json").string();
  c.seg_manifest = (c.dir / "pairs.json").string();
  std::ofstream(c.img_manifest) << imgs.dump();
  std::ofstream(c.seg_manifest) << pairs.dump();
  return c;
}

void run_json(const nlohmann::json& j) { run(RunConfig::from_json(j.dump())); }

std::vector<nlohmann::json> read_jsonl(const std::string& path) {
  std::ifstream in(path);
  std::vector<nlohmann::json> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty()) lines.push_back(nlohmann::json::parse(line));
  }
  return lines;
}

std::vector<char> slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  return std::vector<char>(std::istreambuf_iterator<char>(in), {});
}

// -------------------------------------------------------------- criteria

// Every analytic gradient agrees with finite differences, within budget.
Outcome check_gradient_audit() {
  const auto t0 = Clock::now();
  auto cases = audit_ops();
  auto model_cases = audit_model();
  cases.insert(cases.end(), std::make_move_iterator(model_cases.begin()),
               std::make_move_iterator(model_cases.end()));
  double worst = 0;
  bool ok = true;
  std::string first_fail;
  for (const auto& c : cases) {
    worst = std::max(worst, c.report.max_rel_err);
    if (!c.pass() && first_fail.empty()) {
      ok = false;
      first_fail = c.name;
    }
  }
  const double elapsed = secs_since(t0);
  if (elapsed >= 300.0) ok = false;
  std::string detail = std::to_string(cases.size()) + " checks, worst rel err " + fmt(worst) +
                       ", " + fmt(elapsed) + "s";
  if (!first_fail.empty()) detail += ", first failure: " + first_fail;
  return {ok, detail};
}

// Both convolutions match their naive reference on random shapes, and the
// transposed convolution is the exact adjoint of the forward one.
Outcome check_conv_oracles() {
  Rng rng(1234);
  double worst_fwd = 0, worst_adj = 0;
  int shapes = 0;

  auto rel_max_diff = [](const Tensor<double>& a, const Tensor<double>& b) {
    double num = 0, den = 1;
    for (int64_t i = 0; i < a.size(); ++i) {
      num = std::max(num, std::abs(a.data()[i] - b.data()[i]));
      den = std::max(den, std::abs(b.data()[i]));
    }
    return num / den;
  };

  for (int trial = 0; trial < 50; ++trial) {
    const int64_t cin = 1 + static_cast<int64_t>(rng.uniform_int(4));
    const int64_t cout = 1 + static_cast<int64_t>(rng.uniform_int(4));
    const int64_t k = 1 + static_cast<int64_t>(rng.uniform_int(4));
    const int64_t s = 1 + static_cast<int64_t>(rng.uniform_int(3));
    const int64_t p = static_cast<int64_t>(rng.uniform_int(static_cast<uint64_t>((k - 1) / 2 + 1)));
    const int64_t n = 1 + static_cast<int64_t>(rng.uniform_int(2));
    // exact geometry: the strided output tiles the input with no remainder
    const int64_t oh = 1 + static_cast<int64_t>(rng.uniform_int(4));
    const int64_t ow = 1 + static_cast<int64_t>(rng.uniform_int(4));
    const int64_t h = k - 2 * p + s * (oh - 1);
    const int64_t w = k - 2 * p + s * (ow - 1);
    if (h < 1 || w < 1) continue;
    ++shapes;

    const ConvGeom fwd{cin, cout, k, k, s, p};
    const auto x = randn({n, cin, h, w}, rng);
    const auto wt = randn({cout, cin, k, k}, rng);
    const auto b = randn({1, cout, 1, 1}, rng);
    const auto y = conv2d(x, wt, b, fwd, nullptr);
    worst_fwd = std::max(worst_fwd, rel_max_diff(y, detail::conv2d_direct(x, wt, b, fwd)));

    const ConvGeom bwd{cout, cin, k, k, s, p};
    const auto yt = randn({n, cout, oh, ow}, rng);
    const auto wtt = randn({cout, cin, k, k}, rng);
    const auto bt = randn({1, cin, 1, 1}, rng);
    const auto xt = conv_transpose2d(yt, wtt, bt, bwd, nullptr);
    worst_fwd =
        std::max(worst_fwd, rel_max_diff(xt, detail::conv_transpose2d_direct(yt, wtt, bt, bwd)));

    // <conv(x), y> == <x, convT(y)> with a shared weight and zero biases
    const auto zb_out = Tensor<double>::zeros({1, cout, 1, 1});
    const auto zb_in = Tensor<double>::zeros({1, cin, 1, 1});
    const double lhs = dot(conv2d(x, wt, zb_out, fwd, nullptr), yt);
    const double rhs = dot(x, conv_transpose2d(yt, wt, zb_in, bwd, nullptr));
    const double scale = std::max({std::abs(lhs), std::abs(rhs), 1.0});
    worst_adj = std::max(worst_adj, std::abs(lhs - rhs) / scale);
  }

  const bool ok = shapes >= 50 && worst_fwd <= 1e-6 && worst_adj <= 1e-5;
  return {ok, std::to_string(shapes) + " shapes, oracle rel " + fmt(worst_fwd) + ", adjoint rel " +
                  fmt(worst_adj)};
}

// The encoder-decoder produces the documented shape chain for every
// supported input size, with the 224 latent at (n,1024,11,11).
Outcome check_shape_contract() {
  ModelConfig mc;
  mc.num_classes = 9;
  Model<float> m(mc);
  bool ok = true;
  std::string detail;
  for (int64_t s : {64, 128, 224, 256}) {
    const auto rows = m.trace(Shape{2, 3, s, s});
    if (rows.size() != 10) ok = false;
    const Shape out = rows.back().second;
    if (!(out == Shape{2, 9, s, s})) ok = false;
    for (const auto& [name, shape] : rows) {
      if (name == "enc5" && s == 224 && !(shape == Shape{2, 1024, 11, 11})) ok = false;
      if (name == "enc5") detail += std::to_string(s) + "->latent " + shape.str() + " ";
    }
  }
  bool threw = false;
  try {
    m.trace(Shape{1, 3, 60, 60});
  } catch (const ShapeError&) {
    threw = true;
  }
  ok = ok && threw;
  return {ok, detail + (threw ? "(60 rejected)" : "(60 was not rejected)")};
}

// The published per-class tables are internally consistent: F1 re-derived
// from precision/recall matches each row, and the printed means match
// their columns.
Outcome check_published_tables() {
  struct Row {
    double iou, p, r, f1;
  };
  // 9-class experiment
  const std::vector<Row> t1 = {
      {0.00, 0.00, 0.00, 0.00}, {0.73, 0.79, 0.91, 0.85}, {0.77, 0.84, 0.90, 0.87},
      {0.50, 0.80, 0.58, 0.67}, {0.53, 0.61, 0.79, 0.69}, {0.41, 0.65, 0.53, 0.58},
      {0.17, 0.80, 0.18, 0.30}, {0.09, 0.49, 0.09, 0.16}, {0.94, 0.96, 0.97, 0.97}};
  const Row t1_mean = {0.46, 0.66, 0.55, 0.57};
  // 19-class experiment
  const std::vector<Row> t2 = {
      {0.00, 0.00, 0.00, 0.00}, {0.39, 0.64, 0.49, 0.56}, {0.00, 0.00, 0.00, 0.00},
      {0.64, 0.70, 0.89, 0.78}, {0.00, 0.00, 0.00, 0.00}, {0.34, 0.51, 0.51, 0.51},
      {0.01, 0.71, 0.01, 0.02}, {0.22, 0.50, 0.29, 0.37}, {0.00, 0.00, 0.00, 0.00},
      {0.00, 0.00, 0.00, 0.00}, {0.73, 0.78, 0.92, 0.85}, {0.53, 0.71, 0.68, 0.70},
      {0.55, 0.69, 0.73, 0.71}, {0.40, 0.69, 0.49, 0.57}, {0.20, 0.64, 0.22, 0.33},
      {0.00, 0.01, 0.00, 0.00}, {0.00, 0.00, 0.00, 0.00}, {0.00, 0.00, 0.00, 0.00},
      {0.92, 0.94, 0.97, 0.96}};
  const Row t2_mean = {0.26, 0.40, 0.33, 0.33};

  double worst_row = 0, worst_mean = 0;
  auto audit_table = [&](const std::vector<Row>& rows, const Row& mean) {
    Row sum = {0, 0, 0, 0};
    for (const Row& r : rows) {
      const double f1 = (r.p + r.r > 0) ? 2 * r.p * r.r / (r.p + r.r) : 0.0;
      worst_row = std::max(worst_row, std::abs(f1 - r.f1));
      const double iou = (2.0 - r.f1 > 0) ? r.f1 / (2.0 - r.f1) : 0.0;
      worst_row = std::max(worst_row, std::abs(iou - r.iou));
      sum.iou += r.iou;
      sum.p += r.p;
      sum.r += r.r;
      sum.f1 += r.f1;
    }
    const double n = static_cast<double>(rows.size());
    worst_mean = std::max({worst_mean, std::abs(sum.iou / n - mean.iou),
                           std::abs(sum.p / n - mean.p), std::abs(sum.r / n - mean.r),
                           std::abs(sum.f1 / n - mean.f1)});
  };
  audit_table(t1, t1_mean);
  audit_table(t2, t2_mean);

  const bool ok = worst_row <= 0.01 && worst_mean <= 0.005;
  return {ok, "28 rows, worst row gap " + fmt(worst_row) + ", worst mean gap " + fmt(worst_mean)};
}

// On random confusion matrices the metric identities hold to 1e-12:
// IoU = F1/(2-F1) and IoU <= min(precision, recall).
Outcome check_metric_identities() {
  Rng rng(77);
  double worst_eq = 0;
  bool order_ok = true;
  for (int trial = 0; trial < 1000; ++trial) {
    const int64_t nc = 2 + static_cast<int64_t>(rng.uniform_int(9));
    ConfusionMatrix cm(Taxonomy::generic(nc));
    for (int64_t t = 0; t < nc; ++t) {
      if (rng.uniform() < 0.15) continue;  // leave some classes empty
      for (int64_t p = 0; p < nc; ++p) cm.add(t, p, rng.uniform_int(1000));
    }
    const auto rep = compute_metrics(cm);
    for (const auto& c : rep.per_class) {
      if (c.f1_defined && c.iou_defined) {
        worst_eq = std::max(worst_eq, std::abs(c.iou - c.f1 / (2.0 - c.f1)));
      }
      if (c.iou_defined && c.precision_defined && c.iou > c.precision + 1e-12) order_ok = false;
      if (c.iou_defined && c.recall_defined && c.iou > c.recall + 1e-12) order_ok = false;
    }
  }
  const bool ok = worst_eq <= 1e-12 && order_ok;
  return {ok, "1000 matrices, worst identity gap " + fmt(worst_eq) +
                  (order_ok ? ", ordering holds" : ", ordering violated")};
}

// The network can overfit four synthetic images: dice loss below 0.05 and
// pixel accuracy above 0.98, inside ten minutes.
Outcome check_overfit() {
  const auto t0 = Clock::now();
  const Corpus c = write_corpus("overfit");
  const auto ckpt = (c.dir / "fit.ckpt").string();
  const auto log = (c.dir / "fit.jsonl").string();
  run_json({{"task", "train"},
            {"manifest", c.seg_manifest},
            {"taxonomy", "generic"},
            {"num_classes", 3},
            {"input_size", 64},
            {"batch_size", 4},
            {"epochs", 200},
            {"initial_lr", 1e-3},
            {"lr_halving_period", 1000},
            {"weight_decay", 0.0},
            {"augment", false},
            {"loss", "dice"},
            {"stop_loss", 0.003},
            {"seed", 9},
            {"log", log},
            {"checkpoint_out", ckpt}});

  double final_loss = 1.0;
  int64_t epochs = 0;
  for (const auto& j : read_jsonl(log)) {
    if (j.contains("mean_loss")) {
      final_loss = j["mean_loss"].get<double>();
      epochs = j["epoch"].get<int64_t>();
    }
  }

  auto lc = load_checkpoint(ckpt);
  const Taxonomy tax = Taxonomy::generic(3);
  int64_t hit = 0, seen = 0;
  for (size_t i = 0; i < c.images.size(); ++i) {
    const auto x = normalize(load_image(c.images[i]), NormalizationStats{});
    const auto probs = lc.model->forward(x, nullptr, false);
    const LabelMap pred = predict_labelmap(probs, tax);
    const LabelMap truth = load_mask(c.masks[i], tax);
    for (size_t p = 0; p < pred.data.size(); ++p) hit += pred.data[p] == truth.data[p];
    seen += static_cast<int64_t>(pred.data.size());
  }
  const double acc = static_cast<double>(hit) / static_cast<double>(seen);
  const double elapsed = secs_since(t0);

  const bool ok = final_loss < 0.05 && acc > 0.98 && elapsed < 600.0;
  return {ok, "loss " + fmt(final_loss) + " after " + std::to_string(epochs) +
                  " epochs, pixel acc " + fmt(acc) + ", " + fmt(elapsed) + "s"};
}

// Pretrained encoder-decoder weights transfer bit-exactly into a fresh
// segmentation network, and pretraining loss actually descends.
Outcome check_transfer_and_pretrain() {
  const Corpus c = write_corpus("pretrain");
  const auto ckpt = (c.dir / "recon.ckpt").string();
  const auto log = (c.dir / "pre.jsonl").string();
  run_json({{"task", "pretrain"},
            {"manifest", c.img_manifest},
            {"input_size", 64},
            {"batch_size", 2},
            {"epochs", 25},
            {"seed", 11},
            {"log", log},
            {"checkpoint_out", ckpt}});

  std::vector<double> losses;
  for (const auto& j : read_jsonl(log)) {
    if (j.contains("step")) losses.push_back(j["loss"].get<double>());
  }
  bool curve_ok = losses.size() == 50;
  // Window-20 moving average must be non-increasing, and must at least
  // halve over the run so a flat curve cannot pass.
  constexpr size_t kWindow = 20;
  double first_ma = 0, prev = 1e300;
  double worst_rise = 0;
  for (size_t i = 0; curve_ok && i + kWindow <= losses.size(); ++i) {
    double m = 0;
    for (size_t k = i; k < i + kWindow; ++k) m += losses[k];
    m /= kWindow;
    if (i == 0) first_ma = m;
    worst_rise = std::max(worst_rise, m - prev);
    if (m > prev + 1e-9) curve_ok = false;
    prev = m;
  }
  if (curve_ok && !(prev < 0.5 * first_ma)) curve_ok = false;

  auto lc = load_checkpoint(ckpt);
  ModelConfig mc;
  mc.num_classes = 3;
  mc.seed = 5;
  Model<float> seg(mc);
  const auto dec5_before = seg.blocks()[9].weight.values();
  const int copied = seg.transfer_from(*lc.model);
  bool exact = copied == 9;
  for (size_t i = 0; i < 9; ++i) {
    const auto& a = seg.blocks()[i];
    const auto& b = lc.model->blocks()[i];
    exact = exact && a.weight.values() == b.weight.values() &&
            a.bias.values() == b.bias.values();
    if (a.bn) {
      exact = exact && a.bn->gamma.values() == b.bn->gamma.values() &&
              a.bn->beta.values() == b.bn->beta.values() &&
              a.bn->running_mean.values() == b.bn->running_mean.values() &&
              a.bn->running_var.values() == b.bn->running_var.values();
    }
  }
  exact = exact && seg.blocks()[9].weight.values() == dec5_before;

  const bool ok = curve_ok && exact;
  std::string detail = std::to_string(copied) + "/10 layers copied" +
                       (exact ? " bit-exactly" : " WITH DIFFERENCES") + "; " +
                       std::to_string(losses.size()) + " steps, mse " +
                       (losses.empty() ? "?" : fmt(losses.front()) + " -> " + fmt(losses.back()));
  if (!curve_ok) detail += ", smoothed curve rose by " + fmt(worst_rise);
  return {ok, detail};
}

// Ten-crop augmentation turns 245 pairs into 2450 deterministic samples.
Outcome check_augmentation_counts() {
  std::vector<ManifestEntry> entries(245);
  for (size_t i = 0; i < entries.size(); ++i) {
    entries[i].image = "img" + std::to_string(i) + ".ppm";
    entries[i].mask = "msk" + std::to_string(i) + ".pgm";
  }
  DatasetOptions o;
  o.augment = true;
  o.segmentation = true;
  o.num_classes = 19;
  o.batch_size = 64;
  DatasetIter iter(entries, o);
  const bool count_ok = iter.samples_per_epoch() == 2450 && iter.batches_per_epoch() == 39;

  auto img = Tensor<float>::zeros({1, 3, 256, 256});
  Rng rng(5);
  for (int64_t i = 0; i < img.size(); ++i) img.data()[i] = static_cast<float>(rng.uniform());
  LabelMap mask;
  mask.h = mask.w = 256;
  mask.taxonomy = Taxonomy::generic(19);
  mask.data.resize(256 * 256);
  for (size_t i = 0; i < mask.data.size(); ++i) mask.data[i] = static_cast<int32_t>(i % 19);

  const auto a = ten_crop(img, mask);
  const auto b = ten_crop(img, mask);
  bool crops_ok = a.size() == 10 && b.size() == 10;
  for (size_t i = 0; crops_ok && i < 10; ++i) {
    crops_ok = a[i].image.shape() == Shape{1, 3, 224, 224} && a[i].mask.h == 224 &&
               a[i].mask.w == 224 && a[i].image.values() == b[i].image.values() &&
               a[i].mask.data == b[i].mask.data;
  }
  crops_ok = crops_ok && a[0].image.values() == crop_image(img, 0, 0, 224, 224).values();

  const bool ok = count_ok && crops_ok;
  return {ok, std::to_string(iter.samples_per_epoch()) + " samples, " +
                  std::to_string(iter.batches_per_epoch()) + " batches, 10 deterministic crops"};
}

// Folding 19 classes to 9 maps every source class to its documented
// target and conserves the pixel histogram exactly.
Outcome check_remap() {
  const std::array<int32_t, 19> expected = {0, 1, 1, 1, 1, 1, 1, 1, 1, 1,
                                            2, 3, 4, 5, 6, 7, 3, 3, 8};
  if (single9_merge_table() != expected) return {false, "merge table mismatch"};

  Rng rng(99);
  for (int trial = 0; trial < 20; ++trial) {
    LabelMap full;
    full.h = full.w = 64;
    full.taxonomy = Taxonomy::full19();
    full.data.resize(64 * 64);
    std::array<uint64_t, 19> src_hist{};
    for (auto& v : full.data) {
      v = static_cast<int32_t>(rng.uniform_int(19));
      ++src_hist[static_cast<size_t>(v)];
    }
    const LabelMap folded = remap_to_single9(full);
    if (folded.taxonomy.size() != 9) return {false, "folded taxonomy is not single9"};

    std::array<uint64_t, 9> dst_hist{};
    for (size_t i = 0; i < folded.data.size(); ++i) {
      if (folded.data[i] != expected[static_cast<size_t>(full.data[i])]) {
        return {false, "pixel " + std::to_string(i) + " mapped incorrectly"};
      }
      ++dst_hist[static_cast<size_t>(folded.data[i])];
    }
    std::array<uint64_t, 9> want{};
    for (size_t s = 0; s < 19; ++s) want[static_cast<size_t>(expected[s])] += src_hist[s];
    if (want != dst_hist) return {false, "histogram not conserved"};
  }
  return {true, "20 random maps, histogram conserved, table exact"};
}

// Identical configurations produce byte-identical checkpoints and reports.
Outcome check_determinism() {
  const Corpus c = write_corpus("determinism");
  const auto a = (c.dir / "a.ckpt").string();
  const auto b = (c.dir / "b.ckpt").string();
  for (const auto& out : {a, b}) {
    run_json({{"task", "train"},
              {"manifest", c.seg_manifest},
              {"taxonomy", "generic"},
              {"num_classes", 3},
              {"input_size", 64},
              {"batch_size", 4},
              {"epochs", 1},
              {"augment", false},
              {"seed", 13},
              {"checkpoint_out", out}});
  }
  const bool ckpt_ok = slurp(a) == slurp(b);

  const auto ra = (c.dir / "a.json").string();
  const auto rb = (c.dir / "b.json").string();
  for (const auto& rep : {ra, rb}) {
    run_json({{"task", "eval"},
              {"manifest", c.seg_manifest},
              {"taxonomy", "generic"},
              {"num_classes", 3},
              {"input_size", 64},
              {"checkpoint_in", a},
              {"report_json", rep}});
  }
  const bool report_ok = slurp(ra) == slurp(rb);

  const bool ok = ckpt_ok && report_ok;
  return {ok, std::string("checkpoints ") + (ckpt_ok ? "identical" : "DIFFER") + ", reports " +
                  (report_ok ? "identical" : "DIFFER")};
}

}  // namespace

// Runs every criterion, or only those whose name contains argv[1].
int main(int argc, char** argv) {
  const std::string filter = argc > 1 ? argv[1] : "";
  const std::vector<std::pair<std::string, std::function<Outcome()>>> checks = {
      {"gradient audit", check_gradient_audit},
      {"convolution oracles", check_conv_oracles},
      {"shape contract", check_shape_contract},
      {"published table consistency", check_published_tables},
      {"metric identities", check_metric_identities},
      {"synthetic overfit", check_overfit},
      {"weight transfer and pretraining descent", check_transfer_and_pretrain},
      {"augmentation counts", check_augmentation_counts},
      {"class remap", check_remap},
      {"run determinism", check_determinism},
  };

  int failures = 0, ran = 0;
  for (const auto& [name, fn] : checks) {
    if (!filter.empty() && name.find(filter) == std::string::npos) continue;
    ++ran;
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failures += o.pass ? 0 : 1;
    std::cout << (o.pass ? "PASS" : "FAIL") << "  " << name << "  (" << o.detail << ")\n";
    std::cout.flush();
  }
  if (failures > 0) std::cout << failures << " of " << ran << " checks failed\n";
  return failures == 0 && ran > 0 ? 0 : 1;
}
