#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "checkpoint.hpp"
#include "doctest.h"
#include "json.hpp"
#include "lapseg.h"
#include "model.hpp"

namespace fs = std::filesystem;

namespace {

fs::path temp_dir() {
  auto d = fs::temp_directory_path() / "lapseg_capi_tests";
  fs::create_directories(d);
  return d;
}

// A narrow (but structurally faithful) network keeps these tests quick.
lapseg::ModelConfig small_config(lapseg::Head head) {
  lapseg::ModelConfig mc;
  mc.head = head;
  mc.num_classes = 3;
  mc.seed = 11;
  mc.encoder_filters = {8, 16, 32, 64, 128};
  mc.decoder_filters = {64, 32, 16, 8};
  return mc;
}

std::string write_small_checkpoint(lapseg::Head head, const std::string& name, int64_t epoch) {
  lapseg::Model<float> m(small_config(head));
  lapseg::CheckpointMeta meta;
  meta.epoch = epoch;
  meta.lr = 1e-4;
  meta.seed = 11;
  meta.param_count = m.param_count();
  const auto path = (temp_dir() / name).string();
  lapseg::save_checkpoint(path, m, nullptr, meta);
  return path;
}

}  // namespace

TEST_CASE("the library identifies itself") {
  REQUIRE(lapseg_version() != nullptr);
  CHECK(std::string(lapseg_version()) == "1.0.0");
}

TEST_CASE("configs resolve task defaults through the C boundary") {
  lapseg_config* cfg = nullptr;
  const char* json =
      R"({"task": "train", "manifest": "m.json", "checkpoint_out": "c.bin"})";
  REQUIRE(lapseg_config_from_json(json, &cfg) == LAPSEG_OK);
  REQUIRE(cfg != nullptr);
  CHECK(std::string(lapseg_last_error()).empty());

  char* out = nullptr;
  REQUIRE(lapseg_config_to_json(cfg, &out) == LAPSEG_OK);
  REQUIRE(out != nullptr);
  auto j = nlohmann::json::parse(out);
  CHECK(j["task"] == "train");
  CHECK(j["batch_size"] == 2);
  CHECK(j["epochs"] == 90);
  CHECK(j["loss"] == "dice");
  CHECK(j["weight_decay"] == doctest::Approx(5e-4));
  CHECK(j["augment"] == true);
  CHECK(j["taxonomy"] == "full19");
  CHECK(j["num_classes"] == 19);
  CHECK(j["initial_lr"] == doctest::Approx(1e-4));
  lapseg_string_free(out);
  lapseg_config_free(cfg);
}

TEST_CASE("config errors surface with messages") {
  lapseg_config* cfg = reinterpret_cast<lapseg_config*>(0x1);
  CHECK(lapseg_config_from_json("{nope", &cfg) == LAPSEG_ERR_CONFIG);
  CHECK(cfg == nullptr);  // out is reset before any parsing
  CHECK_FALSE(std::string(lapseg_last_error()).empty());

  const char* unknown =
      R"({"task": "train", "manifest": "m", "checkpoint_out": "c", "wat": 1})";
  CHECK(lapseg_config_from_json(unknown, &cfg) == LAPSEG_ERR_CONFIG);
  CHECK(std::string(lapseg_last_error()).find("unknown config key") != std::string::npos);

  CHECK(lapseg_config_from_json(nullptr, &cfg) == LAPSEG_ERR_CONFIG);
  CHECK(lapseg_config_from_json("{}", nullptr) == LAPSEG_ERR_CONFIG);
  CHECK(lapseg_run(nullptr) == LAPSEG_ERR_CONFIG);
}

TEST_CASE("run reports config and data failures distinctly") {
  const auto dir = temp_dir();
  std::ofstream(dir / "empty.json") << "[]";

  lapseg_config* cfg = nullptr;
  const std::string empty_run = std::string(R"({"task": "stats", "manifest": ")") +
                                (dir / "empty.json").string() + R"(", "stats": ")" +
                                (dir / "s.json").string() + R"("})";
  REQUIRE(lapseg_config_from_json(empty_run.c_str(), &cfg) == LAPSEG_OK);
  CHECK(lapseg_run(cfg) == LAPSEG_ERR_CONFIG);
  CHECK(std::string(lapseg_last_error()).find("empty manifest") != std::string::npos);
  lapseg_config_free(cfg);

  const std::string missing_run = std::string(R"({"task": "stats", "manifest": ")") +
                                  (dir / "absent.json").string() + R"(", "stats": ")" +
                                  (dir / "s.json").string() + R"("})";
  REQUIRE(lapseg_config_from_json(missing_run.c_str(), &cfg) == LAPSEG_OK);
  CHECK(lapseg_run(cfg) == LAPSEG_ERR_DATA);
  lapseg_config_free(cfg);
}

TEST_CASE("models open with their metadata intact") {
  lapseg::Model<float> reference(small_config(lapseg::Head::Segmentation));
  const auto path = write_small_checkpoint(lapseg::Head::Segmentation, "seg.ckpt", 4);

  lapseg_model* m = nullptr;
  REQUIRE(lapseg_model_open(path.c_str(), &m) == LAPSEG_OK);
  REQUIRE(m != nullptr);
  CHECK(lapseg_model_param_count(m) == reference.param_count());
  CHECK(lapseg_model_num_classes(m) == 3);
  CHECK(lapseg_model_epoch(m) == 4);
  CHECK(std::string(lapseg_model_head(m)) == "segmentation");
  lapseg_model_close(m);

  lapseg_model* missing = nullptr;
  CHECK(lapseg_model_open((temp_dir() / "absent.ckpt").string().c_str(), &missing) ==
        LAPSEG_ERR_DATA);
  CHECK(missing == nullptr);
  CHECK_FALSE(std::string(lapseg_last_error()).empty());
}

TEST_CASE("segmentation over the C boundary is deterministic and in range") {
  const auto path = write_small_checkpoint(lapseg::Head::Segmentation, "seg64.ckpt", 1);
  lapseg_model* m = nullptr;
  REQUIRE(lapseg_model_open(path.c_str(), &m) == LAPSEG_OK);

  const int64_t h = 64, w = 64;
  std::vector<float> rgb(3 * h * w);
  for (int64_t c = 0; c < 3; ++c)
    for (int64_t i = 0; i < h * w; ++i)
      rgb[static_cast<size_t>(c * h * w + i)] =
          static_cast<float>((i * (c + 3)) % 97) / 96.0f;

  std::vector<int32_t> labels(static_cast<size_t>(h * w), -1);
  REQUIRE(lapseg_model_segment(m, rgb.data(), h, w, nullptr, nullptr, labels.data()) ==
          LAPSEG_OK);
  for (int32_t v : labels) {
    CHECK(v >= 0);
    CHECK(v < 3);
  }

  std::vector<int32_t> again(static_cast<size_t>(h * w), -2);
  const float mean3[3] = {0.5f, 0.5f, 0.5f};
  const float std3[3] = {0.5f, 0.5f, 0.5f};
  REQUIRE(lapseg_model_segment(m, rgb.data(), h, w, nullptr, nullptr, again.data()) == LAPSEG_OK);
  CHECK(labels == again);
  // a different normalization is a different input
  REQUIRE(lapseg_model_segment(m, rgb.data(), h, w, mean3, std3, again.data()) == LAPSEG_OK);

  CHECK(lapseg_model_segment(m, rgb.data(), 60, 64, nullptr, nullptr, labels.data()) ==
        LAPSEG_ERR_CONFIG);
  CHECK(lapseg_model_segment(nullptr, rgb.data(), h, w, nullptr, nullptr, labels.data()) ==
        LAPSEG_ERR_CONFIG);
  CHECK(lapseg_model_segment(m, nullptr, h, w, nullptr, nullptr, labels.data()) ==
        LAPSEG_ERR_CONFIG);
  lapseg_model_close(m);
}

TEST_CASE("reconstruction checkpoints refuse to segment") {
  const auto path = write_small_checkpoint(lapseg::Head::Reconstruction, "recon.ckpt", 1);
  lapseg_model* m = nullptr;
  REQUIRE(lapseg_model_open(path.c_str(), &m) == LAPSEG_OK);
  CHECK(std::string(lapseg_model_head(m)) == "reconstruction");

  std::vector<float> rgb(3 * 64 * 64, 0.5f);
  std::vector<int32_t> labels(64 * 64);
  CHECK(lapseg_model_segment(m, rgb.data(), 64, 64, nullptr, nullptr, labels.data()) ==
        LAPSEG_ERR_CONFIG);
  CHECK(std::string(lapseg_last_error()).find("segmentation") != std::string::npos);
  lapseg_model_close(m);
}
