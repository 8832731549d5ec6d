#pragma once

#include <cstdint>
#include <string>

namespace lapseg {

// Fully resolved run description. Parsed from JSON (snake_case keys), with
// per-task defaults applied for anything the caller leaves unset.
struct RunConfig {
  std::string task;  // pretrain|train|eval|predict|remap|stats|gradcheck
  std::string manifest;
  std::string taxonomy = "full19";
  int64_t num_classes = 0;  // 0: taxonomy size
  int64_t batch_size = 0;
  int64_t epochs = 0;
  double initial_lr = 0.0;
  int64_t lr_halving_period = 10;
  double weight_decay = -1.0;  // -1: task default
  uint64_t seed = 0;
  std::string loss;  // dice|cross_entropy|mse
  std::string checkpoint_in;
  std::string checkpoint_out;
  std::string stats_path;
  int augment = -1;  // tri-state: -1 default, 0 off, 1 on
  bool deterministic = false;
  int64_t input_size = 256;
  std::string log_path;
  std::string report_csv;
  std::string report_json;
  std::string out_dir;
  std::string palette_path;
  int64_t checkpoint_every = 10;
  double stop_loss = 0.0;     // >0: stop training once an epoch's mean loss drops below
  std::string scope = "all";  // gradcheck: layer|model|all

  bool augment_on() const { return augment == 1; }

  // Parses, applies task defaults, validates. Throws ConfigError.
  static RunConfig from_json(const std::string& json);
  std::string to_json() const;  // fully resolved, stable key order

  void apply_defaults();
  void validate() const;
};

}  // namespace lapseg
