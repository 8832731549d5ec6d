#include "runner.hpp"

#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "audit.hpp"
#include "checkpoint.hpp"
#include "dataset.hpp"
#include "error.hpp"
#include "image_io.hpp"
#include "json.hpp"
#include "losses.hpp"
#include "metrics.hpp"
#include "model.hpp"
#include "optim.hpp"
#include "runconfig.hpp"
#include "taxonomy.hpp"
#include "transforms.hpp"

namespace lapseg {

namespace {

namespace fs = std::filesystem;

std::string timestamp() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

// One JSON object per line; step records during training, event records for
// everything else. Events are echoed to stdout so runs narrate themselves.
class JsonlLogger {
 public:
  explicit JsonlLogger(const std::string& path) {
    if (path.empty()) return;
    const fs::path dir = fs::path(path).parent_path();
    if (!dir.empty()) fs::create_directories(dir);
    out_.open(path, std::ios::trunc);
    if (!out_) throw IoError("cannot open log file " + path);
  }

  void step(int64_t step, int64_t epoch, double lr, double loss, const char* extra_key = nullptr,
            double extra_value = 0.0) {
    if (!out_.is_open()) return;
    nlohmann::json j;
    j["ts"] = timestamp();
    j["step"] = step;
    j["epoch"] = epoch;
    j["lr"] = lr;
    j["loss"] = loss;
    if (extra_key) j[extra_key] = extra_value;
    out_ << j.dump() << "\n";
    out_.flush();
  }

  void event(const std::string& msg, nlohmann::json fields = nlohmann::json::object()) {
    std::cout << msg << "\n";
    if (!out_.is_open()) return;
    fields["ts"] = timestamp();
    fields["event"] = msg;
    out_ << fields.dump() << "\n";
    out_.flush();
  }

 private:
  std::ofstream out_;
};

void ensure_parent_dir(const std::string& path) {
  const fs::path dir = fs::path(path).parent_path();
  if (!dir.empty()) fs::create_directories(dir);
}

// model.ckpt -> model-epoch12.ckpt
std::string epoch_checkpoint_path(const std::string& out, int64_t epoch) {
  const fs::path p(out);
  const fs::path named = p.stem().string() + "-epoch" + std::to_string(epoch) +
                         p.extension().string();
  return (p.parent_path() / named).string();
}

Taxonomy taxonomy_for(const RunConfig& cfg) {
  return Taxonomy::from_string(cfg.taxonomy, cfg.num_classes);
}

NormalizationStats stats_for(const RunConfig& cfg) {
  if (!cfg.stats_path.empty() && cfg.task != "stats") {
    return NormalizationStats::load(cfg.stats_path);
  }
  return NormalizationStats{};
}

std::optional<Palette> palette_for(const RunConfig& cfg, const Taxonomy& taxonomy) {
  if (!cfg.palette_path.empty()) {
    Palette p = Palette::load(cfg.palette_path);
    p.validate();
    return p;
  }
  if (taxonomy.size() <= 19) return Palette::defaults(taxonomy);
  return std::nullopt;
}

std::vector<ManifestEntry> manifest_for(const RunConfig& cfg) {
  auto entries = load_manifest(cfg.manifest);
  if (entries.empty()) throw ConfigError("empty manifest: " + cfg.manifest);
  return entries;
}

DatasetOptions dataset_options(const RunConfig& cfg, const Taxonomy& taxonomy, bool segmentation) {
  DatasetOptions o;
  o.batch_size = cfg.batch_size;
  o.augment = cfg.augment_on();
  o.segmentation = segmentation;
  o.num_classes = cfg.num_classes;
  o.input_size = cfg.input_size;
  o.shuffle = true;
  o.shuffle_seed = cfg.seed;
  o.stats = stats_for(cfg);
  o.taxonomy = taxonomy;
  o.palette = palette_for(cfg, taxonomy);
  return o;
}

using LossFn =
    std::function<Tensor<float>(const Tensor<float>&, const Tensor<float>&, Tape<float>*)>;

LossFn loss_for(const std::string& name) {
  if (name == "mse") return [](const Tensor<float>& p, const Tensor<float>& t, Tape<float>* tp) {
    return mse_loss(p, t, tp);
  };
  if (name == "dice") return [](const Tensor<float>& p, const Tensor<float>& t, Tape<float>* tp) {
    return dice_loss(p, t, tp);
  };
  if (name == "cross_entropy") {
    return [](const Tensor<float>& p, const Tensor<float>& t, Tape<float>* tp) {
      return cross_entropy_loss(p, t, tp);
    };
  }
  throw ConfigError("unknown loss '" + name + "'");
}

// Shared epoch loop for pretrain and train. Shuffle order, the schedule and
// every parameter update are pure functions of the config, so identical
// configs produce byte-identical checkpoints.
void train_loop(const RunConfig& cfg, Model<float>& model, Adam<float>& opt, DatasetIter& iter,
                const LossFn& loss_fn, JsonlLogger& log) {
  const bool log_dice = cfg.loss == "dice";
  int64_t global_step = opt.step_count();
  int64_t epochs_run = 0;
  double lr = cfg.initial_lr;

  auto save = [&](const std::string& path, int64_t epoch) {
    ensure_parent_dir(path);
    CheckpointMeta meta;
    meta.epoch = epoch;
    meta.lr = lr;
    meta.seed = cfg.seed;
    meta.param_count = model.param_count();
    save_checkpoint(path, model, &opt, meta);
  };

  for (int64_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    lr = scheduled_lr(cfg.initial_lr, epoch, cfg.lr_halving_period);
    opt.set_lr(static_cast<float>(lr));
    iter.reset(cfg.seed + static_cast<uint64_t>(epoch));

    Batch batch;
    double loss_sum = 0;
    int64_t batches = 0;
    while (iter.next(batch)) {
      Tape<float> tape;
      Tensor<float> out = model.forward(batch.images, &tape, true);
      Tensor<float> loss = loss_fn(out, batch.targets, &tape);
      opt.zero_grad();
      tape.backward(loss);
      opt.step();

      const double lv = static_cast<double>(loss.item());
      if (!std::isfinite(lv)) {
        throw ContractError("training diverged: loss is not finite at step " +
                            std::to_string(global_step + 1));
      }
      ++global_step;
      loss_sum += lv;
      ++batches;
      if (log_dice) {
        log.step(global_step, epoch, lr, lv, "dice", 1.0 - lv);
      } else {
        log.step(global_step, epoch, lr, lv);
      }
    }

    const double mean = loss_sum / static_cast<double>(batches);
    epochs_run = epoch + 1;
    log.event("epoch " + std::to_string(epochs_run) + "/" + std::to_string(cfg.epochs) +
                  " mean_loss=" + std::to_string(mean) + " lr=" + std::to_string(lr),
              {{"epoch", epochs_run}, {"mean_loss", mean}, {"lr", lr}});

    if (cfg.stop_loss > 0 && mean < cfg.stop_loss) {
      log.event("stopping early: mean loss " + std::to_string(mean) + " is below " +
                std::to_string(cfg.stop_loss));
      break;
    }
    if (epochs_run % cfg.checkpoint_every == 0 && epochs_run < cfg.epochs) {
      const std::string path = epoch_checkpoint_path(cfg.checkpoint_out, epochs_run);
      save(path, epochs_run);
      log.event("checkpoint " + path);
    }
  }

  save(cfg.checkpoint_out, epochs_run);
  log.event("checkpoint " + cfg.checkpoint_out);
}

void cmd_pretrain(const RunConfig& cfg) {
  JsonlLogger log(cfg.log_path);
  const Taxonomy taxonomy = taxonomy_for(cfg);
  DatasetIter iter(manifest_for(cfg), dataset_options(cfg, taxonomy, /*segmentation=*/false));

  std::unique_ptr<Model<float>> model;
  std::unique_ptr<Adam<float>> opt;
  if (!cfg.checkpoint_in.empty()) {
    LoadedCheckpoint lc = load_checkpoint(cfg.checkpoint_in);
    if (lc.config.head != Head::Reconstruction) {
      throw ConfigError("pretrain resumes from a reconstruction checkpoint, " +
                        cfg.checkpoint_in + " holds a segmentation model");
    }
    model = std::move(lc.model);
    opt = std::make_unique<Adam<float>>(model->parameters(), static_cast<float>(cfg.initial_lr),
                                        static_cast<float>(cfg.weight_decay));
    if (lc.has_optimizer) opt->restore(lc.opt_step, std::move(lc.opt_slots));
    log.event("resumed from " + cfg.checkpoint_in + " (epoch " + std::to_string(lc.meta.epoch) +
              ")");
  } else {
    ModelConfig mc;
    mc.head = Head::Reconstruction;
    mc.seed = cfg.seed;
    model = std::make_unique<Model<float>>(mc);
    opt = std::make_unique<Adam<float>>(model->parameters(), static_cast<float>(cfg.initial_lr),
                                        static_cast<float>(cfg.weight_decay));
  }

  train_loop(cfg, *model, *opt, iter, loss_for(cfg.loss), log);
}

void cmd_train(const RunConfig& cfg) {
  JsonlLogger log(cfg.log_path);
  const Taxonomy taxonomy = taxonomy_for(cfg);
  DatasetIter iter(manifest_for(cfg), dataset_options(cfg, taxonomy, /*segmentation=*/true));

  ModelConfig mc;
  mc.head = Head::Segmentation;
  mc.num_classes = cfg.num_classes;
  mc.seed = cfg.seed;
  auto model = std::make_unique<Model<float>>(mc);

  std::unique_ptr<Adam<float>> opt;
  if (!cfg.checkpoint_in.empty()) {
    LoadedCheckpoint lc = load_checkpoint(cfg.checkpoint_in);
    if (lc.config.head == Head::Reconstruction) {
      const int copied = model->transfer_from(*lc.model);
      log.event("transferred " + std::to_string(copied) + "/" +
                std::to_string(model->blocks().size()) + " layers from " + cfg.checkpoint_in);
    } else {
      if (lc.config.num_classes != cfg.num_classes) {
        throw ConfigError("checkpoint " + cfg.checkpoint_in + " has " +
                          std::to_string(lc.config.num_classes) + " classes, config expects " +
                          std::to_string(cfg.num_classes));
      }
      model = std::move(lc.model);
      log.event("resumed weights from " + cfg.checkpoint_in + " (epoch " +
                std::to_string(lc.meta.epoch) + ")");
    }
  }
  opt = std::make_unique<Adam<float>>(model->parameters(), static_cast<float>(cfg.initial_lr),
                                      static_cast<float>(cfg.weight_decay));

  train_loop(cfg, *model, *opt, iter, loss_for(cfg.loss), log);
}

// Loads a segmentation checkpoint and checks it against the run's taxonomy.
std::unique_ptr<Model<float>> load_segmentation_model(const RunConfig& cfg,
                                                      const Taxonomy& taxonomy) {
  LoadedCheckpoint lc = load_checkpoint(cfg.checkpoint_in);
  if (lc.config.head != Head::Segmentation) {
    throw ConfigError(cfg.task + " needs a segmentation checkpoint, " + cfg.checkpoint_in +
                      " holds a reconstruction model");
  }
  if (lc.config.num_classes != taxonomy.size()) {
    throw ConfigError("checkpoint " + cfg.checkpoint_in + " has " +
                      std::to_string(lc.config.num_classes) + " classes, taxonomy " +
                      taxonomy.str() + " has " + std::to_string(taxonomy.size()));
  }
  return std::move(lc.model);
}

LabelMap predict_one(Model<float>& model, const std::string& image_path,
                     const NormalizationStats& stats, int64_t input_size,
                     const Taxonomy& taxonomy) {
  Tensor<float> img = load_image(image_path);
  img = resize_image(img, input_size, input_size);
  const Tensor<float> x = normalize(img, stats);
  const Tensor<float> probs = model.forward(x, nullptr, /*training=*/false);
  return predict_labelmap(probs, taxonomy);
}

void cmd_eval(const RunConfig& cfg) {
  JsonlLogger log(cfg.log_path);
  const Taxonomy taxonomy = taxonomy_for(cfg);
  const auto entries = manifest_for(cfg);
  auto model = load_segmentation_model(cfg, taxonomy);
  const NormalizationStats stats = stats_for(cfg);
  const std::optional<Palette> palette = palette_for(cfg, taxonomy);

  ConfusionMatrix cm(taxonomy);
  for (const auto& e : entries) {
    if (e.mask.empty()) {
      throw DataError("eval: manifest entry " + e.image + " has no mask");
    }
    const LabelMap pred = predict_one(*model, e.image, stats, cfg.input_size, taxonomy);
    LabelMap truth = load_mask(e.mask, taxonomy, palette ? &*palette : nullptr);
    truth = resize_mask(truth, cfg.input_size, cfg.input_size);
    cm.accumulate(pred, truth);
  }

  MetricsReport report = compute_metrics(cm);
  report.checkpoint_id = cfg.checkpoint_in;
  report.manifest_id = cfg.manifest;
  if (!cfg.report_csv.empty()) {
    ensure_parent_dir(cfg.report_csv);
    emit_csv(report, cfg.report_csv);
  }
  if (!cfg.report_json.empty()) {
    ensure_parent_dir(cfg.report_json);
    emit_json(report, cfg.report_json);
  }

  std::cout << "evaluated " << entries.size() << " pairs (" << report.total_pixels
            << " pixels)\n";
  for (const auto& c : report.per_class) {
    std::cout << "  " << c.name << ": iou=" << format2(c.iou) << " precision="
              << format2(c.precision) << " recall=" << format2(c.recall) << " f1="
              << format2(c.f1) << "\n";
  }
  std::cout << "mean: iou=" << format2(report.mean_iou) << " precision="
            << format2(report.mean_precision) << " recall=" << format2(report.mean_recall)
            << " f1=" << format2(report.mean_f1) << "\n";
}

void cmd_predict(const RunConfig& cfg) {
  const Taxonomy taxonomy = taxonomy_for(cfg);
  const auto entries = manifest_for(cfg);
  auto model = load_segmentation_model(cfg, taxonomy);
  const NormalizationStats stats = stats_for(cfg);
  const std::optional<Palette> palette = palette_for(cfg, taxonomy);

  fs::create_directories(cfg.out_dir);
  for (const auto& e : entries) {
    const LabelMap pred = predict_one(*model, e.image, stats, cfg.input_size, taxonomy);
    const std::string stem = fs::path(e.image).stem().string();
    save_mask_indexed(pred, (fs::path(cfg.out_dir) / (stem + ".pgm")).string());
    if (palette) {
      save_mask_color(pred, *palette, (fs::path(cfg.out_dir) / (stem + ".ppm")).string());
    }
  }
  std::cout << "wrote " << entries.size() << " predictions to " << cfg.out_dir << "\n";
}

void cmd_remap(const RunConfig& cfg) {
  if (cfg.taxonomy != "full19") {
    throw ConfigError("remap folds full19 into single9; got taxonomy " + cfg.taxonomy);
  }
  const Taxonomy taxonomy = Taxonomy::full19();
  const auto entries = manifest_for(cfg);
  const std::optional<Palette> palette = palette_for(cfg, taxonomy);

  fs::create_directories(cfg.out_dir);
  for (const auto& e : entries) {
    const std::string& path = e.mask.empty() ? e.image : e.mask;
    const LabelMap full = load_mask(path, taxonomy, palette ? &*palette : nullptr);
    const LabelMap folded = remap_to_single9(full);
    const std::string stem = fs::path(path).stem().string();
    save_mask_indexed(folded, (fs::path(cfg.out_dir) / (stem + ".pgm")).string());
  }
  std::cout << "remapped " << entries.size() << " masks to " << cfg.out_dir << "\n";
}

void cmd_stats(const RunConfig& cfg) {
  const auto entries = manifest_for(cfg);
  StatsAccumulator acc;
  for (const auto& e : entries) acc.add(load_image(e.image));
  const NormalizationStats stats = acc.finalize();
  ensure_parent_dir(cfg.stats_path);
  stats.save(cfg.stats_path);
  std::cout << "stats over " << entries.size() << " images (" << acc.pixels() << " pixels):\n";
  for (int c = 0; c < 3; ++c) {
    std::cout << "  channel " << c << ": mean=" << stats.mean[static_cast<size_t>(c)]
              << " std=" << stats.std[static_cast<size_t>(c)] << "\n";
  }
  std::cout << "wrote " << cfg.stats_path << "\n";
}

void cmd_gradcheck(const RunConfig& cfg) {
  bool ok = true;
  auto show = [&ok](const std::vector<AuditCase>& cases) {
    for (const auto& c : cases) {
      const bool pass = c.pass();
      ok = ok && pass;
      std::cout << (pass ? "PASS" : "FAIL") << " " << c.name << "  " << c.report.str() << "\n";
    }
  };
  if (cfg.scope == "layer" || cfg.scope == "all") show(audit_ops());
  if (cfg.scope == "model" || cfg.scope == "all") show(audit_model());
  if (!ok) throw AuditError("gradient audit failed; see the FAIL lines above");
}

}  // namespace

void run(const RunConfig& cfg) {
  RunConfig c = cfg;
  c.apply_defaults();
  c.validate();
  if (c.task == "pretrain") return cmd_pretrain(c);
  if (c.task == "train") return cmd_train(c);
  if (c.task == "eval") return cmd_eval(c);
  if (c.task == "predict") return cmd_predict(c);
  if (c.task == "remap") return cmd_remap(c);
  if (c.task == "stats") return cmd_stats(c);
  if (c.task == "gradcheck") return cmd_gradcheck(c);
  throw ConfigError("unknown task '" + c.task + "'");
}

}  // namespace lapseg
