#include "lapseg.h"

#include <cstring>
#include <string>
#include <utility>

#include "checkpoint.hpp"
#include "error.hpp"
#include "metrics.hpp"
#include "model.hpp"
#include "runconfig.hpp"
#include "runner.hpp"
#include "transforms.hpp"

namespace {

thread_local std::string g_last_error;

lapseg_status status_for(lapseg::ErrorKind kind) {
  switch (lapseg::exit_code_for(kind)) {
    case 2: return LAPSEG_ERR_CONFIG;
    case 3: return LAPSEG_ERR_DATA;
    case 4: return LAPSEG_ERR_AUDIT;
    default: return LAPSEG_ERR_INTERNAL;
  }
}

template <typename F>
lapseg_status guarded(F&& f) {
  try {
    f();
    g_last_error.clear();
    return LAPSEG_OK;
  } catch (const lapseg::Error& e) {
    g_last_error = e.what();
    return status_for(e.kind());
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return LAPSEG_ERR_INTERNAL;
  } catch (...) {
    g_last_error = "unknown error";
    return LAPSEG_ERR_INTERNAL;
  }
}

lapseg_status null_argument(const char* what) {
  g_last_error = std::string(what) + " must not be null";
  return LAPSEG_ERR_CONFIG;
}

char* copy_string(const std::string& s) {
  char* out = new char[s.size() + 1];
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

}  // namespace

struct lapseg_config {
  lapseg::RunConfig cfg;
};

struct lapseg_model {
  lapseg::LoadedCheckpoint ckpt;
};

extern "C" {

const char* lapseg_version(void) { return "1.0.0"; }

const char* lapseg_last_error(void) { return g_last_error.c_str(); }

void lapseg_string_free(char* s) { delete[] s; }

lapseg_status lapseg_config_from_json(const char* json, lapseg_config** out) {
  if (!json) return null_argument("json");
  if (!out) return null_argument("out");
  *out = nullptr;
  return guarded([&] { *out = new lapseg_config{lapseg::RunConfig::from_json(json)}; });
}

lapseg_status lapseg_config_to_json(const lapseg_config* config, char** out_json) {
  if (!config) return null_argument("config");
  if (!out_json) return null_argument("out_json");
  *out_json = nullptr;
  return guarded([&] { *out_json = copy_string(config->cfg.to_json()); });
}

void lapseg_config_free(lapseg_config* config) { delete config; }

lapseg_status lapseg_run(const lapseg_config* config) {
  if (!config) return null_argument("config");
  return guarded([&] { lapseg::run(config->cfg); });
}

lapseg_status lapseg_model_open(const char* checkpoint_path, lapseg_model** out) {
  if (!checkpoint_path) return null_argument("checkpoint_path");
  if (!out) return null_argument("out");
  *out = nullptr;
  return guarded(
      [&] { *out = new lapseg_model{lapseg::load_checkpoint(checkpoint_path)}; });
}

void lapseg_model_close(lapseg_model* model) { delete model; }

int64_t lapseg_model_param_count(const lapseg_model* model) {
  return model ? model->ckpt.meta.param_count : 0;
}

int64_t lapseg_model_num_classes(const lapseg_model* model) {
  return model ? model->ckpt.config.num_classes : 0;
}

int64_t lapseg_model_epoch(const lapseg_model* model) {
  return model ? model->ckpt.meta.epoch : 0;
}

const char* lapseg_model_head(const lapseg_model* model) {
  if (!model) return "";
  return model->ckpt.config.head == lapseg::Head::Segmentation ? "segmentation"
                                                               : "reconstruction";
}

lapseg_status lapseg_model_segment(lapseg_model* model, const float* rgb_chw, int64_t h,
                                   int64_t w, const float* mean3, const float* std3,
                                   int32_t* out_labels) {
  if (!model) return null_argument("model");
  if (!rgb_chw) return null_argument("rgb_chw");
  if (!out_labels) return null_argument("out_labels");
  return guarded([&] {
    if (model->ckpt.config.head != lapseg::Head::Segmentation) {
      throw lapseg::ConfigError("lapseg_model_segment needs a segmentation checkpoint");
    }
    if (h < 1 || w < 1) {
      throw lapseg::ShapeError("lapseg_model_segment: image is " + std::to_string(h) + "x" +
                               std::to_string(w));
    }
    const lapseg::Shape shape{1, 3, h, w};
    std::vector<float> buf(rgb_chw, rgb_chw + shape.elems());
    auto img = lapseg::Tensor<float>::from_buffer(shape, std::move(buf));

    lapseg::NormalizationStats stats;
    for (int c = 0; c < 3; ++c) {
      if (mean3) stats.mean[static_cast<size_t>(c)] = mean3[c];
      if (std3) stats.std[static_cast<size_t>(c)] = std3[c];
    }
    stats.validate();

    const auto x = lapseg::normalize(img, stats);
    const auto probs = model->ckpt.model->forward(x, nullptr, /*training=*/false);
    const auto taxonomy = lapseg::Taxonomy::generic(model->ckpt.config.num_classes);
    const lapseg::LabelMap pred = lapseg::predict_labelmap(probs, taxonomy);
    std::memcpy(out_labels, pred.data.data(), pred.data.size() * sizeof(int32_t));
  });
}

}  // extern "C"
