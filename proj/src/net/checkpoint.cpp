#include "paec/checkpoint.hpp"

#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <random>

#include <json.hpp>

#include "paec/errors.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace paec {
namespace {

constexpr const char* kVersionTag = "paec-checkpoint-1";

void write_blob_file(const fs::path& path,
                     const std::map<std::string, std::vector<float>>& blobs) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("checkpoint: cannot open " + path.string());
  const char magic[8] = {'P', 'A', 'E', 'C', 'W', 'T', '0', '1'};
  f.write(magic, 8);
  const std::uint32_t count = static_cast<std::uint32_t>(blobs.size());
  f.write(reinterpret_cast<const char*>(&count), 4);
  for (const auto& [name, data] : blobs) {
    const std::uint16_t nl = static_cast<std::uint16_t>(name.size());
    f.write(reinterpret_cast<const char*>(&nl), 2);
    f.write(name.data(), nl);
    const std::uint64_t n = data.size();
    f.write(reinterpret_cast<const char*>(&n), 8);
    f.write(reinterpret_cast<const char*>(data.data()),
            static_cast<std::streamsize>(n * sizeof(float)));
  }
  if (!f) throw IoError("checkpoint: write failed: " + path.string());
}

std::map<std::string, std::vector<float>> read_blob_file(const fs::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("checkpoint: cannot open " + path.string());
  char magic[8];
  f.read(magic, 8);
  if (std::memcmp(magic, "PAECWT01", 8) != 0)
    throw IoError("checkpoint: bad magic in " + path.string());
  std::uint32_t count = 0;
  f.read(reinterpret_cast<char*>(&count), 4);
  std::map<std::string, std::vector<float>> out;
  for (std::uint32_t i = 0; i < count; ++i) {
    std::uint16_t nl = 0;
    f.read(reinterpret_cast<char*>(&nl), 2);
    std::string name(nl, '\0');
    f.read(name.data(), nl);
    std::uint64_t n = 0;
    f.read(reinterpret_cast<char*>(&n), 8);
    std::vector<float> data(n);
    f.read(reinterpret_cast<char*>(data.data()),
           static_cast<std::streamsize>(n * sizeof(float)));
    if (!f) throw IoError("checkpoint: truncated blob file " + path.string());
    out[name] = std::move(data);
  }
  return out;
}

json stage_to_json(const StageConfig& sc) {
  return json{{"n_layers", sc.n_layers},
              {"width", sc.width},
              {"in_channels", sc.in_channels},
              {"ftlstm_hidden", sc.ftlstm_hidden},
              {"speaker_conditioning", sc.speaker_conditioning},
              {"output_mode", sc.output_mode == OutputMode::map ? "map" : "mask"},
              {"n_bins", sc.n_bins},
              {"mca_heads", sc.mca_heads},
              {"mca_dim", sc.mca_dim},
              {"spk_bilstm_hidden", sc.spk_bilstm_hidden}};
}

StageConfig stage_from_json(const json& j) {
  StageConfig sc;
  sc.n_layers = j.at("n_layers").get<int>();
  sc.width = j.at("width").get<int>();
  sc.in_channels = j.at("in_channels").get<int>();
  sc.ftlstm_hidden = j.at("ftlstm_hidden").get<int>();
  sc.speaker_conditioning = j.at("speaker_conditioning").get<bool>();
  sc.output_mode =
      j.at("output_mode").get<std::string>() == "map" ? OutputMode::map : OutputMode::mask;
  sc.n_bins = j.at("n_bins").get<int>();
  sc.mca_heads = j.at("mca_heads").get<int>();
  sc.mca_dim = j.at("mca_dim").get<int>();
  sc.spk_bilstm_hidden = j.at("spk_bilstm_hidden").get<int>();
  return sc;
}

} // namespace

std::string variant_config_to_json(const ModelVariantConfig& cfg) {
  json j;
  j["variant"] = to_string(cfg.variant);
  j["stages"] = json::array();
  for (const auto& sc : cfg.stages) j["stages"].push_back(stage_to_json(sc));
  return j.dump(2);
}

ModelVariantConfig variant_config_from_json(const std::string& text) {
  json j = json::parse(text);
  ModelVariantConfig cfg;
  cfg.variant = variant_from_string(j.at("variant").get<std::string>());
  for (const auto& sj : j.at("stages")) cfg.stages.push_back(stage_from_json(sj));
  if (cfg.stages.empty() || cfg.stages.size() > 2)
    throw ConfigError("variant config: expected 1 or 2 stages");
  return cfg;
}

bool checkpoint_exists(const std::string& dir) {
  return fs::exists(fs::path(dir) / "VERSION") &&
         fs::exists(fs::path(dir) / "weights.bin");
}

void save_checkpoint(const std::string& dir, const Checkpoint& ck) {
  const fs::path target(dir);
  std::mt19937_64 rng(std::random_device{}());
  const fs::path tmp =
      target.parent_path() /
      (target.filename().string() + ".tmp" + std::to_string(rng() % 1000000));
  fs::create_directories(tmp);
  {
    std::ofstream v(tmp / "VERSION");
    v << kVersionTag << '\n';
  }
  {
    std::ofstream c(tmp / "config.json");
    c << variant_config_to_json(ck.cfg) << '\n';
  }
  write_blob_file(tmp / "weights.bin", ck.weights);
  if (!ck.opt_m.empty()) {
    std::map<std::string, std::vector<float>> opt;
    for (const auto& [k, v] : ck.opt_m) opt["m:" + k] = v;
    for (const auto& [k, v] : ck.opt_v) opt["v:" + k] = v;
    write_blob_file(tmp / "optimizer.bin", opt);
  }
  {
    json meta{{"step", ck.step}, {"adam_t", ck.adam_t}, {"task", ck.task}};
    std::ofstream m(tmp / "meta.json");
    m << meta.dump(2) << '\n';
  }
  if (fs::exists(target)) fs::remove_all(target);
  fs::rename(tmp, target);
}

Checkpoint load_checkpoint(const std::string& dir) {
  const fs::path p(dir);
  if (!checkpoint_exists(dir))
    throw IoError("checkpoint: " + dir + " is not a checkpoint directory");
  {
    std::ifstream v(p / "VERSION");
    std::string tag;
    std::getline(v, tag);
    if (tag != kVersionTag)
      throw IoError("checkpoint: unsupported version '" + tag + "' in " + dir);
  }
  Checkpoint ck;
  {
    std::ifstream c(p / "config.json");
    std::string text((std::istreambuf_iterator<char>(c)),
                     std::istreambuf_iterator<char>());
    ck.cfg = variant_config_from_json(text);
  }
  ck.weights = read_blob_file(p / "weights.bin");
  if (fs::exists(p / "optimizer.bin")) {
    auto opt = read_blob_file(p / "optimizer.bin");
    for (auto& [k, v] : opt) {
      if (k.rfind("m:", 0) == 0)
        ck.opt_m[k.substr(2)] = std::move(v);
      else if (k.rfind("v:", 0) == 0)
        ck.opt_v[k.substr(2)] = std::move(v);
    }
  }
  if (fs::exists(p / "meta.json")) {
    std::ifstream m(p / "meta.json");
    json meta = json::parse(m);
    ck.step = meta.value("step", 0);
    ck.adam_t = meta.value("adam_t", 0);
    ck.task = meta.value("task", "");
  }
  return ck;
}

template <class S>
void apply_weights(TdpfModel<S>& model,
                   const std::map<std::string, std::vector<float>>& weights,
                   const std::string& from_prefix, const std::string& to_prefix) {
  int applied = 0;
  for (const auto& [name, data] : weights) {
    std::string target = name;
    if (!from_prefix.empty()) {
      if (name.rfind(from_prefix, 0) != 0) continue;
      target = to_prefix + name.substr(from_prefix.size());
    }
    if (!model.params().has(target))
      throw StrategyError("apply_weights: model has no parameter '" + target + "'");
    auto var = model.params().get(target);
    if (var.val().numel() != data.size())
      throw StrategyError("apply_weights: size mismatch for '" + target + "'");
    for (std::size_t i = 0; i < data.size(); ++i)
      var.val().v[i] = static_cast<S>(data[i]);
    ++applied;
  }
  if (applied == 0)
    throw StrategyError("apply_weights: no parameters matched prefix '" +
                        from_prefix + "'");
}

std::map<std::string, std::vector<float>> snapshot_weights(
    const TdpfModel<float>& model) {
  std::map<std::string, std::vector<float>> out;
  for (const auto& [name, node] : model.params().all()) out[name] = node->val.v;
  return out;
}

template void apply_weights<float>(TdpfModel<float>&,
                                   const std::map<std::string, std::vector<float>>&,
                                   const std::string&, const std::string&);
template void apply_weights<double>(TdpfModel<double>&,
                                    const std::map<std::string, std::vector<float>>&,
                                    const std::string&, const std::string&);

} // namespace paec
