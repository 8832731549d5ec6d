#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "model.hpp"
#include "optim.hpp"

namespace lapseg {

// Training metadata carried inside a checkpoint.
struct CheckpointMeta {
  int64_t epoch = 0;
  double lr = 0.0;
  uint64_t seed = 0;
  int64_t param_count = 0;
  std::string init = "kaiming_normal";
};

// A checkpoint read back from disk: the rebuilt model plus whatever
// optimizer state was stored.
struct LoadedCheckpoint {
  ModelConfig config;
  CheckpointMeta meta;
  std::unique_ptr<Model<float>> model;
  bool has_optimizer = false;
  int64_t opt_step = 0;
  std::vector<Adam<float>::Slot> opt_slots;  // aligned with model->parameters()
};

// Binary container: "LSEG", u32 version, u32 header length, UTF-8 JSON
// header (config, meta, optimizer step, blob directory), then raw
// little-endian float32 blobs in directory order. Saving the same state
// twice produces byte-identical files.
void save_checkpoint(const std::string& path, Model<float>& model, const Adam<float>* optimizer,
                     const CheckpointMeta& meta);

LoadedCheckpoint load_checkpoint(const std::string& path);

// JSON (de)serialization of the architecture block inside the header.
std::string model_config_to_json(const ModelConfig& cfg);
ModelConfig model_config_from_json(const std::string& json);

}  // namespace lapseg
