#include "runconfig.hpp"

#include <set>

#include "error.hpp"
#include "json.hpp"
#include "taxonomy.hpp"

namespace lapseg {

namespace {

const std::set<std::string> kTasks = {"pretrain", "train",  "eval",     "predict",
                                      "remap",    "stats",  "gradcheck"};
const std::set<std::string> kLosses = {"dice", "cross_entropy", "mse"};

const std::set<std::string> kKeys = {
    "task",           "manifest",       "taxonomy",     "num_classes",  "batch_size",
    "epochs",         "initial_lr",     "lr_halving_period", "weight_decay", "seed",
    "loss",           "checkpoint_in",  "checkpoint_out",    "stats",        "augment",
    "deterministic",  "input_size",     "log",               "report_csv",   "report_json",
    "out_dir",        "palette",        "checkpoint_every",  "stop_loss",    "scope"};

}  // namespace

RunConfig RunConfig::from_json(const std::string& json) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(json);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  for (const auto& [key, _] : j.items()) {
    if (!kKeys.count(key)) throw ConfigError("unknown config key '" + key + "'");
  }

  RunConfig c;
  try {
    c.task = j.value("task", "");
    c.manifest = j.value("manifest", "");
    c.taxonomy = j.value("taxonomy", "full19");
    c.num_classes = j.value("num_classes", int64_t{0});
    c.batch_size = j.value("batch_size", int64_t{0});
    c.epochs = j.value("epochs", int64_t{0});
    c.initial_lr = j.value("initial_lr", 0.0);
    c.lr_halving_period = j.value("lr_halving_period", int64_t{10});
    c.weight_decay = j.value("weight_decay", -1.0);
    c.seed = j.value("seed", uint64_t{0});
    c.loss = j.value("loss", "");
    c.checkpoint_in = j.value("checkpoint_in", "");
    c.checkpoint_out = j.value("checkpoint_out", "");
    c.stats_path = j.value("stats", "");
    if (j.contains("augment")) c.augment = j["augment"].get<bool>() ? 1 : 0;
    c.deterministic = j.value("deterministic", false);
    c.input_size = j.value("input_size", int64_t{256});
    c.log_path = j.value("log", "");
    c.report_csv = j.value("report_csv", "");
    c.report_json = j.value("report_json", "");
    c.out_dir = j.value("out_dir", "");
    c.palette_path = j.value("palette", "");
    c.checkpoint_every = j.value("checkpoint_every", int64_t{10});
    c.stop_loss = j.value("stop_loss", 0.0);
    c.scope = j.value("scope", "all");
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config field has the wrong type: ") + e.what());
  }
  c.apply_defaults();
  c.validate();
  return c;
}

void RunConfig::apply_defaults() {
  if (task == "pretrain") {
    if (initial_lr == 0.0) initial_lr = 0.01;
    if (batch_size == 0) batch_size = 64;
    if (epochs == 0) epochs = 1;
    if (loss.empty()) loss = "mse";
    if (weight_decay < 0) weight_decay = 0.0;
    if (augment == -1) augment = 0;
  } else if (task == "train") {
    if (initial_lr == 0.0) initial_lr = 1e-4;
    if (batch_size == 0) batch_size = 2;
    if (epochs == 0) epochs = 90;
    if (loss.empty()) loss = "dice";
    if (weight_decay < 0) weight_decay = 0.0005;
    if (augment == -1) augment = 1;
  } else {
    if (batch_size == 0) batch_size = 1;
    if (epochs == 0) epochs = 1;
    if (weight_decay < 0) weight_decay = 0.0;
    if (augment == -1) augment = 0;
  }
  if (num_classes == 0 && taxonomy != "generic") {
    num_classes = Taxonomy::from_string(taxonomy, 0).size();
  }
}

void RunConfig::validate() const {
  if (!kTasks.count(task)) {
    throw ConfigError(task.empty() ? "config is missing 'task'"
                                   : "unknown task '" + task + "'");
  }
  if (task != "gradcheck" && manifest.empty()) {
    throw ConfigError("task " + task + " needs a manifest");
  }
  if (!loss.empty() && !kLosses.count(loss)) throw ConfigError("unknown loss '" + loss + "'");
  if (task == "pretrain" && loss != "mse") {
    throw ConfigError("pretrain uses the mse loss, got '" + loss + "'");
  }
  if (task == "train" && loss == "mse") {
    throw ConfigError("train expects dice or cross_entropy, got 'mse'");
  }
  if (taxonomy != "full19" && taxonomy != "single9" && taxonomy != "generic") {
    throw ConfigError("unknown taxonomy '" + taxonomy + "'");
  }
  if (taxonomy == "generic" && num_classes < 2) {
    throw ConfigError("generic taxonomy needs an explicit num_classes >= 2");
  }
  if (taxonomy != "generic" && num_classes != Taxonomy::from_string(taxonomy, 0).size()) {
    throw ConfigError("num_classes " + std::to_string(num_classes) + " does not match taxonomy " +
                      taxonomy);
  }
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (epochs < 1) throw ConfigError("epochs must be >= 1");
  if ((task == "train" || task == "pretrain") && !(initial_lr > 0)) {
    throw ConfigError("initial_lr must be positive");
  }
  if (lr_halving_period < 1) throw ConfigError("lr_halving_period must be >= 1");
  if (weight_decay < 0) throw ConfigError("weight_decay must be >= 0");
  if (input_size < 64 || input_size % 16 != 0) {
    throw ConfigError("input_size must be a multiple of 16, at least 64");
  }
  if (augment_on() && input_size != 256) {
    throw ConfigError("10-crop augmentation requires input_size 256");
  }
  if (checkpoint_every < 1) throw ConfigError("checkpoint_every must be >= 1");
  if (stop_loss < 0) throw ConfigError("stop_loss must be >= 0");
  if (scope != "all" && scope != "layer" && scope != "model") {
    throw ConfigError("gradcheck scope must be layer, model, or all");
  }
  if (task == "train" || task == "eval" || task == "predict") {
    if (num_classes < 2) throw ConfigError("segmentation needs num_classes >= 2");
  }
  if (task == "stats" && stats_path.empty()) {
    throw ConfigError("task stats needs an output path in 'stats'");
  }
  if (task == "eval" && checkpoint_in.empty()) throw ConfigError("eval needs checkpoint_in");
  if (task == "predict" && checkpoint_in.empty()) throw ConfigError("predict needs checkpoint_in");
  if ((task == "predict" || task == "remap") && out_dir.empty()) {
    throw ConfigError("task " + task + " needs out_dir");
  }
  if ((task == "pretrain" || task == "train") && checkpoint_out.empty()) {
    throw ConfigError("task " + task + " needs checkpoint_out");
  }
}

std::string RunConfig::to_json() const {
  nlohmann::json j;
  j["task"] = task;
  j["manifest"] = manifest;
  j["taxonomy"] = taxonomy;
  j["num_classes"] = num_classes;
  j["batch_size"] = batch_size;
  j["epochs"] = epochs;
  j["initial_lr"] = initial_lr;
  j["lr_halving_period"] = lr_halving_period;
  j["weight_decay"] = weight_decay;
  j["seed"] = seed;
  j["loss"] = loss;
  j["checkpoint_in"] = checkpoint_in;
  j["checkpoint_out"] = checkpoint_out;
  j["stats"] = stats_path;
  j["augment"] = augment_on();
  j["deterministic"] = deterministic;
  j["input_size"] = input_size;
  j["log"] = log_path;
  j["report_csv"] = report_csv;
  j["report_json"] = report_json;
  j["out_dir"] = out_dir;
  j["palette"] = palette_path;
  j["checkpoint_every"] = checkpoint_every;
  j["stop_loss"] = stop_loss;
  j["scope"] = scope;
  return j.dump(2);
}

}  // namespace lapseg
