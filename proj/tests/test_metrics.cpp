#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "metrics.hpp"
#include "rng.hpp"
#include "taxonomy.hpp"

using namespace lapseg;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir() {
  auto d = fs::temp_directory_path() / "lapseg_metrics_tests";
  fs::create_directories(d);
  return d;
}

// truth rows: [10 2 1; 1 5 0; 1 0 4]
ConfusionMatrix sample_cm() {
  ConfusionMatrix cm(Taxonomy::generic(3));
  cm.add(0, 0, 10);
  cm.add(0, 1, 2);
  cm.add(0, 2, 1);
  cm.add(1, 0, 1);
  cm.add(1, 1, 5);
  cm.add(2, 0, 1);
  cm.add(2, 2, 4);
  return cm;
}

}  // namespace

TEST_CASE("confusion counts fold correctly") {
  auto cm = sample_cm();
  CHECK(cm.total() == 24);
  CHECK(cm.at(0, 1) == 2);
  CHECK(cm.tp(0) == 10);
  CHECK(cm.fp(0) == 2);   // column 0 off-diagonal
  CHECK(cm.fn(0) == 3);   // row 0 off-diagonal
  CHECK(cm.tp(1) == 5);
  CHECK(cm.fp(1) == 2);
  CHECK(cm.fn(1) == 1);
  CHECK(cm.fp(2) == 1);
  CHECK(cm.fn(2) == 1);

  auto twice = sample_cm();
  twice.merge(cm);
  CHECK(twice.total() == 48);
  CHECK(twice.at(2, 2) == 8);

  CHECK_THROWS_AS(cm.add(3, 0, 1), ContractError);
  CHECK_THROWS_AS(cm.add(0, -1, 1), ContractError);
}

TEST_CASE("accumulate walks prediction and truth in lockstep") {
  const auto tax = Taxonomy::generic(3);
  LabelMap truth, pred;
  truth.h = pred.h = 2;
  truth.w = pred.w = 2;
  truth.taxonomy = pred.taxonomy = tax;
  truth.data = {0, 0, 1, 2};
  pred.data = {0, 1, 1, 2};
  ConfusionMatrix cm(tax);
  cm.accumulate(pred, truth);
  CHECK(cm.at(0, 0) == 1);
  CHECK(cm.at(0, 1) == 1);
  CHECK(cm.at(1, 1) == 1);
  CHECK(cm.at(2, 2) == 1);
  CHECK(cm.total() == 4);

  LabelMap small = pred;
  small.w = 1;
  small.data = {0, 1};
  CHECK_THROWS_AS(cm.accumulate(small, truth), ShapeError);
}

TEST_CASE("per-class metrics reproduce hand arithmetic") {
  auto rep = compute_metrics(sample_cm());
  REQUIRE(rep.per_class.size() == 3);
  CHECK(rep.total_pixels == 24);

  const auto& c0 = rep.per_class[0];
  CHECK(c0.precision == doctest::Approx(10.0 / 12).epsilon(1e-12));
  CHECK(c0.recall == doctest::Approx(10.0 / 13).epsilon(1e-12));
  CHECK(c0.iou == doctest::Approx(10.0 / 15).epsilon(1e-12));
  CHECK(c0.f1 == doctest::Approx(0.8).epsilon(1e-12));

  const auto& c1 = rep.per_class[1];
  CHECK(c1.precision == doctest::Approx(5.0 / 7).epsilon(1e-12));
  CHECK(c1.recall == doctest::Approx(5.0 / 6).epsilon(1e-12));
  CHECK(c1.iou == doctest::Approx(5.0 / 8).epsilon(1e-12));
  CHECK(c1.f1 == doctest::Approx(10.0 / 13).epsilon(1e-12));

  const auto& c2 = rep.per_class[2];
  CHECK(c2.precision == doctest::Approx(0.8).epsilon(1e-12));
  CHECK(c2.recall == doctest::Approx(0.8).epsilon(1e-12));
  CHECK(c2.f1 == doctest::Approx(0.8).epsilon(1e-12));

  const double mean_iou = (10.0 / 15 + 5.0 / 8 + 4.0 / 6) / 3;
  CHECK(rep.mean_iou == doctest::Approx(mean_iou).epsilon(1e-12));
  for (const auto& c : rep.per_class) {
    CHECK(c.iou_defined);
    CHECK(c.f1_defined);
  }
}

TEST_CASE("undefined metrics are flagged, never invented") {
  ConfusionMatrix cm(Taxonomy::generic(3));
  cm.add(0, 0, 8);
  cm.add(0, 1, 2);
  cm.add(1, 1, 3);
  cm.add(1, 0, 1);
  // class 2 never appears anywhere

  auto rep = compute_metrics(cm);
  const auto& ghost = rep.per_class[2];
  CHECK_FALSE(ghost.iou_defined);
  CHECK_FALSE(ghost.precision_defined);
  CHECK_FALSE(ghost.recall_defined);
  CHECK_FALSE(ghost.f1_defined);
  CHECK(ghost.iou == 0.0);
  CHECK_FALSE(rep.undefined_excluded_from_mean);

  const double iou0 = 8.0 / 11, iou1 = 3.0 / 6;
  CHECK(rep.mean_iou == doctest::Approx((iou0 + iou1) / 3).epsilon(1e-12));

  auto excl = compute_metrics(cm, true);
  CHECK(excl.undefined_excluded_from_mean);
  CHECK(excl.mean_iou == doctest::Approx((iou0 + iou1) / 2).epsilon(1e-12));

  // class present in truth but never predicted: recall and IoU exist, the rest do not
  ConfusionMatrix missed(Taxonomy::generic(3));
  missed.add(0, 0, 5);
  missed.add(2, 0, 4);
  auto mrep = compute_metrics(missed);
  const auto& c2 = mrep.per_class[2];
  CHECK(c2.recall_defined);
  CHECK(c2.recall == 0.0);
  CHECK(c2.iou_defined);
  CHECK(c2.iou == 0.0);
  CHECK_FALSE(c2.precision_defined);
  CHECK_FALSE(c2.f1_defined);
}

TEST_CASE("iou and f1 are two views of the same counts") {
  Rng rng(2024);
  for (int trial = 0; trial < 200; ++trial) {
    const int64_t nc = 2 + static_cast<int64_t>(rng.uniform_int(7));
    ConfusionMatrix cm(Taxonomy::generic(nc));
    for (int64_t t = 0; t < nc; ++t)
      for (int64_t p = 0; p < nc; ++p)
        cm.add(t, p, rng.uniform_int(50));
    auto rep = compute_metrics(cm);
    for (const auto& c : rep.per_class) {
      if (!c.f1_defined || !c.iou_defined) continue;
      CHECK(std::abs(c.iou - c.f1 / (2.0 - c.f1)) <= 1e-12);
      if (c.precision_defined) CHECK(c.iou <= c.precision + 1e-12);
      if (c.recall_defined) CHECK(c.iou <= c.recall + 1e-12);
    }
  }
}

TEST_CASE("display rounding is half-up at two decimals") {
  CHECK(round2(0.845) == doctest::Approx(0.85).epsilon(1e-12));
  CHECK(round2(0.84499) == doctest::Approx(0.84).epsilon(1e-12));
  CHECK(round2(0.005) == doctest::Approx(0.01).epsilon(1e-12));
  CHECK(round2(0.0) == 0.0);
  CHECK(round2(1.0) == 1.0);
  CHECK(format2(2.0 / 3.0) == "0.67");
  CHECK(format2(0.845) == "0.85");
  CHECK(format2(0.1) == "0.10");
}

TEST_CASE("csv reports parse back to the same numbers") {
  const auto path = (temp_dir() / "report.csv").string();
  auto rep = compute_metrics(sample_cm());
  emit_csv(rep, path);

  std::ifstream in(path);
  std::string line;
  REQUIRE(std::getline(in, line));
  CHECK(line == "class,iou,precision,recall,f1");
  std::vector<std::vector<std::string>> rows;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    REQUIRE(cells.size() == 5);
    rows.push_back(cells);
  }
  REQUIRE(rows.size() == 4);  // 3 classes + Mean
  CHECK(rows.back()[0] == "Mean");
  for (size_t i = 0; i < 3; ++i) {
    CHECK(rows[i][0] == rep.per_class[i].name);
    CHECK(std::stod(rows[i][1]) == doctest::Approx(rep.per_class[i].iou).epsilon(1e-9));
    CHECK(std::stod(rows[i][4]) == doctest::Approx(rep.per_class[i].f1).epsilon(1e-9));
  }
  CHECK(std::stod(rows.back()[1]) == doctest::Approx(rep.mean_iou).epsilon(1e-9));
}

TEST_CASE("json reports round-trip losslessly") {
  const auto path = (temp_dir() / "report.json").string();
  auto rep = compute_metrics(sample_cm());
  rep.checkpoint_id = "ckpt-0042";
  rep.manifest_id = "val-split";
  emit_json(rep, path);
  auto back = report_from_json_file(path);
  CHECK(back.taxonomy == rep.taxonomy);
  CHECK(back.total_pixels == rep.total_pixels);
  CHECK(back.checkpoint_id == "ckpt-0042");
  CHECK(back.manifest_id == "val-split");
  REQUIRE(back.per_class.size() == rep.per_class.size());
  for (size_t i = 0; i < rep.per_class.size(); ++i) {
    CHECK(back.per_class[i].name == rep.per_class[i].name);
    CHECK(back.per_class[i].iou == rep.per_class[i].iou);  // exact doubles via JSON
    CHECK(back.per_class[i].f1 == rep.per_class[i].f1);
    CHECK(back.per_class[i].f1_defined == rep.per_class[i].f1_defined);
  }
  CHECK(back.mean_f1 == rep.mean_f1);

  std::ofstream(temp_dir() / "garbage.json") << "not json";
  CHECK_THROWS_AS(report_from_json_file((temp_dir() / "garbage.json").string()), DataError);
}

TEST_CASE("argmax decode breaks ties toward the lower class") {
  auto probs = Tensor<float>::zeros({1, 3, 1, 4});
  // pixel 0: clear class 2; pixel 1: tie 0/1; pixel 2: clear 1; pixel 3: all equal
  const float v[3][4] = {{0.1f, 0.4f, 0.2f, 0.3f},
                         {0.2f, 0.4f, 0.7f, 0.3f},
                         {0.7f, 0.2f, 0.1f, 0.3f}};
  for (int c = 0; c < 3; ++c)
    for (int x = 0; x < 4; ++x) probs.data()[c * 4 + x] = v[c][x];
  auto map = predict_labelmap(probs, Taxonomy::generic(3));
  CHECK(map.data == std::vector<int32_t>{2, 0, 1, 0});
  CHECK(map.h == 1);
  CHECK(map.w == 4);

  CHECK_THROWS_AS(predict_labelmap(probs, Taxonomy::generic(4)), ShapeError);
  CHECK_THROWS_AS(predict_labelmap(Tensor<float>::zeros({2, 3, 1, 1}), Taxonomy::generic(3)),
                  ShapeError);
}
