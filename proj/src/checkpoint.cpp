#include "checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include "json.hpp"

namespace lapseg {

namespace {

constexpr char kMagic[4] = {'L', 'S', 'E', 'G'};
constexpr uint32_t kVersion = 1;

static_assert(std::endian::native == std::endian::little,
              "checkpoint IO assumes a little-endian host");

nlohmann::json config_json(const ModelConfig& cfg) {
  return {{"head", head_to_string(cfg.head)},
          {"num_classes", cfg.num_classes},
          {"in_channels", cfg.in_channels},
          {"seed", cfg.seed},
          {"dropout_p", cfg.dropout_p},
          {"encoder_filters", cfg.encoder_filters},
          {"decoder_filters", cfg.decoder_filters}};
}

ModelConfig config_from(const nlohmann::json& j) {
  ModelConfig cfg;
  cfg.head = head_from_string(j.at("head").get<std::string>());
  cfg.num_classes = j.at("num_classes").get<int64_t>();
  cfg.in_channels = j.at("in_channels").get<int64_t>();
  cfg.seed = j.at("seed").get<uint64_t>();
  cfg.dropout_p = j.at("dropout_p").get<double>();
  cfg.encoder_filters = j.at("encoder_filters").get<std::vector<int64_t>>();
  cfg.decoder_filters = j.at("decoder_filters").get<std::vector<int64_t>>();
  cfg.validate();
  return cfg;
}

void write_u32(std::ostream& out, uint32_t v) {
  out.write(reinterpret_cast<const char*>(&v), 4);
}

uint32_t read_u32(std::istream& in, const std::string& path) {
  uint32_t v = 0;
  in.read(reinterpret_cast<char*>(&v), 4);
  if (in.gcount() != 4) throw DataError(path + ": truncated checkpoint");
  return v;
}

}  // namespace

std::string model_config_to_json(const ModelConfig& cfg) { return config_json(cfg).dump(); }

ModelConfig model_config_from_json(const std::string& json) {
  try {
    return config_from(nlohmann::json::parse(json));
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("bad model config JSON: ") + e.what());
  }
}

void save_checkpoint(const std::string& path, Model<float>& model, const Adam<float>* optimizer,
                     const CheckpointMeta& meta) {
  // Blob order: model state tensors, then optimizer m/v pairs per parameter.
  struct Blob {
    std::string name;
    Shape shape;
    const float* data;
    int64_t nelems;
  };
  std::vector<Blob> blobs;
  auto state = model.state();
  for (auto& p : state) {
    blobs.push_back({p.name, p.tensor.shape(), p.tensor.data(), p.tensor.size()});
  }
  if (optimizer) {
    const auto& params = optimizer->params();
    const auto& slots = optimizer->slots();
    for (size_t i = 0; i < params.size(); ++i) {
      const Shape& s = params[i].tensor.shape();
      blobs.push_back({"opt.m." + params[i].name, s, slots[i].m.data(),
                       static_cast<int64_t>(slots[i].m.size())});
      blobs.push_back({"opt.v." + params[i].name, s, slots[i].v.data(),
                       static_cast<int64_t>(slots[i].v.size())});
    }
  }

  nlohmann::json dir = nlohmann::json::array();
  int64_t offset = 0;
  for (const auto& b : blobs) {
    dir.push_back({{"name", b.name},
                   {"shape", {b.shape.n, b.shape.c, b.shape.h, b.shape.w}},
                   {"offset", offset},
                   {"nelems", b.nelems}});
    offset += b.nelems * static_cast<int64_t>(sizeof(float));
  }

  nlohmann::json header;
  header["config"] = config_json(model.config());
  header["meta"] = {{"epoch", meta.epoch},
                    {"lr", meta.lr},
                    {"seed", meta.seed},
                    {"param_count", meta.param_count},
                    {"head", head_to_string(model.config().head)},
                    {"num_classes", model.config().num_classes},
                    {"init", meta.init}};
  header["optimizer"] = {{"present", optimizer != nullptr},
                         {"step", optimizer ? optimizer->step_count() : 0}};
  header["dir"] = std::move(dir);
  const std::string htext = header.dump();

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write checkpoint " + path);
  out.write(kMagic, 4);
  write_u32(out, kVersion);
  write_u32(out, static_cast<uint32_t>(htext.size()));
  out.write(htext.data(), static_cast<std::streamsize>(htext.size()));
  for (const auto& b : blobs) {
    out.write(reinterpret_cast<const char*>(b.data),
              static_cast<std::streamsize>(b.nelems * sizeof(float)));
  }
  if (!out) throw IoError("short write to checkpoint " + path);
}

LoadedCheckpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint " + path);
  char magic[4];
  in.read(magic, 4);
  if (in.gcount() != 4 || std::memcmp(magic, kMagic, 4) != 0) {
    throw DataError(path + ": not a checkpoint file (bad magic)");
  }
  const uint32_t version = read_u32(in, path);
  if (version != kVersion) {
    throw DataError(path + ": unsupported checkpoint version " + std::to_string(version));
  }
  const uint32_t hlen = read_u32(in, path);
  std::string htext(hlen, '\0');
  in.read(htext.data(), hlen);
  if (static_cast<uint32_t>(in.gcount()) != hlen) {
    throw DataError(path + ": truncated checkpoint header");
  }
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(htext);
  } catch (const nlohmann::json::exception& e) {
    throw DataError(path + ": corrupt checkpoint header: " + e.what());
  }

  LoadedCheckpoint ck;
  try {
    ck.config = config_from(header.at("config"));
    const auto& meta = header.at("meta");
    ck.meta.epoch = meta.at("epoch").get<int64_t>();
    ck.meta.lr = meta.at("lr").get<double>();
    ck.meta.seed = meta.at("seed").get<uint64_t>();
    ck.meta.param_count = meta.at("param_count").get<int64_t>();
    ck.meta.init = meta.value("init", "kaiming_normal");
    ck.has_optimizer = header.at("optimizer").at("present").get<bool>();
    ck.opt_step = header.at("optimizer").at("step").get<int64_t>();
  } catch (const nlohmann::json::exception& e) {
    throw DataError(path + ": checkpoint header missing fields: " + e.what());
  }

  // Read every blob in directory order.
  struct Entry {
    std::string name;
    Shape shape;
    std::vector<float> data;
  };
  std::vector<Entry> entries;
  int64_t expect_offset = 0;
  for (const auto& d : header.at("dir")) {
    Entry e;
    e.name = d.at("name").get<std::string>();
    const auto& sh = d.at("shape");
    if (sh.size() != 4) throw DataError(path + ": blob " + e.name + " has a non-4D shape");
    e.shape = Shape{sh[0].get<int64_t>(), sh[1].get<int64_t>(), sh[2].get<int64_t>(),
                    sh[3].get<int64_t>()};
    const int64_t nelems = d.at("nelems").get<int64_t>();
    const int64_t offset = d.at("offset").get<int64_t>();
    if (nelems != e.shape.elems() || offset != expect_offset || nelems < 0) {
      throw DataError(path + ": blob directory inconsistent at " + e.name);
    }
    expect_offset += nelems * static_cast<int64_t>(sizeof(float));
    e.data.resize(static_cast<size_t>(nelems));
    in.read(reinterpret_cast<char*>(e.data.data()),
            static_cast<std::streamsize>(nelems * sizeof(float)));
    if (in.gcount() != static_cast<std::streamsize>(nelems * sizeof(float))) {
      throw DataError(path + ": truncated blob " + e.name);
    }
    entries.push_back(std::move(e));
  }

  // Rebuild the model and overwrite its state from the blobs.
  ck.model = std::make_unique<Model<float>>(ck.config);
  auto state = ck.model->state();
  size_t cursor = 0;
  for (auto& p : state) {
    if (cursor >= entries.size() || entries[cursor].name != p.name ||
        !(entries[cursor].shape == p.tensor.shape())) {
      throw DataError(path + ": checkpoint state does not match its declared config at " +
                      p.name);
    }
    p.tensor.values() = std::move(entries[cursor].data);
    ++cursor;
  }

  if (ck.has_optimizer) {
    auto params = ck.model->parameters();
    ck.opt_slots.resize(params.size());
    for (size_t i = 0; i < params.size(); ++i) {
      for (const char* kind : {"m", "v"}) {
        if (cursor >= entries.size()) {
          throw DataError(path + ": checkpoint optimizer state is incomplete");
        }
        Entry& e = entries[cursor];
        const std::string expect = std::string("opt.") + kind + "." + params[i].name;
        if (e.name != expect || !(e.shape == params[i].tensor.shape())) {
          throw DataError(path + ": checkpoint optimizer state mismatch at " + expect);
        }
        (kind[0] == 'm' ? ck.opt_slots[i].m : ck.opt_slots[i].v) = std::move(e.data);
        ++cursor;
      }
    }
  }
  if (cursor != entries.size()) {
    throw DataError(path + ": checkpoint carries unexpected extra blobs");
  }
  return ck;
}

}  // namespace lapseg
