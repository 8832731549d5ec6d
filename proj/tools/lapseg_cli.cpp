#include <cstdint>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"
#include "lapseg.h"

namespace {

// Everything a subcommand can override on top of --config. Options are only
// forwarded when actually given, so config-file values survive untouched.
struct Flags {
  std::string config_path;
  std::string manifest, taxonomy, loss, checkpoint_in, checkpoint_out, stats, log;
  std::string report_csv, report_json, out_dir, palette, scope;
  int64_t num_classes = 0, batch_size = 0, epochs = 0, lr_halving_period = 0;
  int64_t input_size = 0, checkpoint_every = 0;
  double initial_lr = 0, weight_decay = 0, stop_loss = 0;
  uint64_t seed = 0;
  bool augment = false, no_augment = false, deterministic = false, print_config = false;
};

void add_common(CLI::App* cmd, Flags& f) {
  cmd->add_option("--config", f.config_path, "JSON config file; flags override its keys");
  cmd->add_option("--manifest", f.manifest, "dataset manifest (JSON array of {image, mask})");
  cmd->add_option("--taxonomy", f.taxonomy, "full19, single9, or generic");
  cmd->add_option("--num-classes", f.num_classes, "class count (default: taxonomy size)");
  cmd->add_option("--batch-size", f.batch_size, "samples per optimizer step");
  cmd->add_option("--epochs", f.epochs, "training epochs");
  cmd->add_option("--initial-lr", f.initial_lr, "initial learning rate");
  cmd->add_option("--lr-halving-period", f.lr_halving_period, "epochs between lr halvings");
  cmd->add_option("--weight-decay", f.weight_decay, "L2 coefficient on conv weights");
  cmd->add_option("--seed", f.seed, "seed for init, shuffling and dropout");
  cmd->add_option("--loss", f.loss, "dice, cross_entropy, or mse");
  cmd->add_option("--checkpoint-in", f.checkpoint_in, "checkpoint to start from");
  cmd->add_option("--checkpoint-out", f.checkpoint_out, "where to write checkpoints");
  cmd->add_option("--stats", f.stats, "normalization stats JSON (output for the stats task)");
  cmd->add_option("--input-size", f.input_size, "square input size (multiple of 16, >= 64)");
  cmd->add_option("--log", f.log, "JSONL training log path");
  cmd->add_option("--report-csv", f.report_csv, "per-class metrics CSV path");
  cmd->add_option("--report-json", f.report_json, "full metrics JSON path");
  cmd->add_option("--out-dir", f.out_dir, "output directory (predict, remap)");
  cmd->add_option("--palette", f.palette, "palette JSON for color-coded masks");
  cmd->add_option("--checkpoint-every", f.checkpoint_every, "epochs between checkpoints");
  cmd->add_option("--stop-loss", f.stop_loss, "stop once an epoch's mean loss drops below");
  cmd->add_option("--scope", f.scope, "gradcheck scope: layer, model, or all");
  auto* on = cmd->add_flag("--augment", f.augment, "10-crop augmentation (256 inputs only)");
  cmd->add_flag("--no-augment", f.no_augment, "disable augmentation")->excludes(on);
  cmd->add_flag("--deterministic", f.deterministic, "pin run-to-run reproducibility (always on)");
  cmd->add_flag("--print-config", f.print_config, "print the resolved config and exit");
}

int exit_code(lapseg_status st) { return st == LAPSEG_ERR_INTERNAL ? 1 : static_cast<int>(st); }

int fail(lapseg_status st) {
  std::cerr << "error: " << lapseg_last_error() << "\n";
  return exit_code(st);
}

int run_task(const std::string& task, const CLI::App* cmd, const Flags& f) {
  nlohmann::json j = nlohmann::json::object();
  if (!f.config_path.empty()) {
    std::ifstream in(f.config_path);
    if (!in) {
      std::cerr << "error: cannot open config file " << f.config_path << "\n";
      return 2;
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    try {
      j = nlohmann::json::parse(buf.str());
    } catch (const nlohmann::json::exception& e) {
      std::cerr << "error: " << f.config_path << " is not valid JSON: " << e.what() << "\n";
      return 2;
    }
    if (!j.is_object()) {
      std::cerr << "error: " << f.config_path << " must hold a JSON object\n";
      return 2;
    }
  }
  j["task"] = task;

  auto given = [&](const char* flag) { return cmd->count(flag) > 0; };
  if (given("--manifest")) j["manifest"] = f.manifest;
  if (given("--taxonomy")) j["taxonomy"] = f.taxonomy;
  if (given("--num-classes")) j["num_classes"] = f.num_classes;
  if (given("--batch-size")) j["batch_size"] = f.batch_size;
  if (given("--epochs")) j["epochs"] = f.epochs;
  if (given("--initial-lr")) j["initial_lr"] = f.initial_lr;
  if (given("--lr-halving-period")) j["lr_halving_period"] = f.lr_halving_period;
  if (given("--weight-decay")) j["weight_decay"] = f.weight_decay;
  if (given("--seed")) j["seed"] = f.seed;
  if (given("--loss")) j["loss"] = f.loss;
  if (given("--checkpoint-in")) j["checkpoint_in"] = f.checkpoint_in;
  if (given("--checkpoint-out")) j["checkpoint_out"] = f.checkpoint_out;
  if (given("--stats")) j["stats"] = f.stats;
  if (given("--input-size")) j["input_size"] = f.input_size;
  if (given("--log")) j["log"] = f.log;
  if (given("--report-csv")) j["report_csv"] = f.report_csv;
  if (given("--report-json")) j["report_json"] = f.report_json;
  if (given("--out-dir")) j["out_dir"] = f.out_dir;
  if (given("--palette")) j["palette"] = f.palette;
  if (given("--checkpoint-every")) j["checkpoint_every"] = f.checkpoint_every;
  if (given("--stop-loss")) j["stop_loss"] = f.stop_loss;
  if (given("--scope")) j["scope"] = f.scope;
  if (f.augment) j["augment"] = true;
  if (f.no_augment) j["augment"] = false;
  if (f.deterministic) j["deterministic"] = true;

  lapseg_config* cfg = nullptr;
  lapseg_status st = lapseg_config_from_json(j.dump().c_str(), &cfg);
  if (st != LAPSEG_OK) return fail(st);

  if (f.print_config) {
    char* resolved = nullptr;
    st = lapseg_config_to_json(cfg, &resolved);
    if (st == LAPSEG_OK) std::cout << resolved << "\n";
    lapseg_string_free(resolved);
    lapseg_config_free(cfg);
    return st == LAPSEG_OK ? 0 : fail(st);
  }

  st = lapseg_run(cfg);
  lapseg_config_free(cfg);
  return st == LAPSEG_OK ? 0 : fail(st);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"lapseg: encoder-decoder segmentation for laparoscopic images"};
  app.require_subcommand(1);
  app.set_version_flag("--version", lapseg_version());

  struct Sub {
    const char* name;
    const char* help;
  };
  const Sub subs[] = {
      {"pretrain", "train the reconstruction network"},
      {"train", "train the segmentation network"},
      {"eval", "score a checkpoint against labeled pairs"},
      {"predict", "write predicted masks for a manifest"},
      {"remap", "fold full19 masks into single9"},
      {"stats", "compute per-channel normalization statistics"},
      {"gradcheck", "audit analytic gradients against finite differences"},
  };

  Flags flags[std::size(subs)];
  CLI::App* cmds[std::size(subs)];
  for (size_t i = 0; i < std::size(subs); ++i) {
    cmds[i] = app.add_subcommand(subs[i].name, subs[i].help);
    add_common(cmds[i], flags[i]);
  }

  CLI11_PARSE(app, argc, argv);

  for (size_t i = 0; i < std::size(subs); ++i) {
    if (cmds[i]->parsed()) return run_task(subs[i].name, cmds[i], flags[i]);
  }
  return 1;
}
