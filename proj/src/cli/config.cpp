#include "paec/config.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>

#include <json.hpp>

#include "paec/errors.hpp"

using nlohmann::json;

namespace paec {
namespace {

void reject_unknown(const json& j, const std::set<std::string>& allowed,
                    const std::string& where) {
  for (auto it = j.begin(); it != j.end(); ++it)
    if (allowed.count(it.key()) == 0)
      throw ConfigError("config: unknown key '" + it.key() + "' in " + where);
}

} // namespace

NlmsConfig ExperimentConfig::nlms_config() const {
  NlmsConfig cfg;
  cfg.taps_per_bin = taps_per_bin;
  cfg.mu = mu;
  cfg.epsilon = epsilon;
  return cfg;
}

TdeConfig ExperimentConfig::tde_config() const {
  TdeConfig cfg;
  cfg.search_ms = tde_search_ms;
  cfg.bands = tde_bands;
  return cfg;
}

ExperimentConfig default_experiment_config() { return {}; }

ExperimentConfig load_experiment_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("config: cannot open " + path);
  json j;
  try {
    j = json::parse(f);
  } catch (const std::exception& e) {
    throw ConfigError("config: " + path + ": " + e.what());
  }
  ExperimentConfig cfg;
  reject_unknown(j, {"paths", "variant", "strategy", "seed", "dsp", "loss",
                     "train", "data", "embedding"},
                 path);
  if (j.contains("paths")) {
    const auto& p = j["paths"];
    reject_unknown(p, {"corpus", "data", "checkpoints", "reports"}, "paths");
    cfg.corpus_dir = p.value("corpus", cfg.corpus_dir);
    cfg.data_dir = p.value("data", cfg.data_dir);
    cfg.checkpoints_dir = p.value("checkpoints", cfg.checkpoints_dir);
    cfg.reports_dir = p.value("reports", cfg.reports_dir);
  }
  cfg.variant = j.value("variant", cfg.variant);
  cfg.strategy = j.value("strategy", cfg.strategy);
  cfg.seed = j.value("seed", cfg.seed);
  if (j.contains("dsp")) {
    const auto& p = j["dsp"];
    reject_unknown(p, {"taps_per_bin", "mu", "epsilon", "tde_search_ms",
                       "tde_bands"},
                   "dsp");
    cfg.taps_per_bin = p.value("taps_per_bin", cfg.taps_per_bin);
    cfg.mu = p.value("mu", cfg.mu);
    cfg.epsilon = p.value("epsilon", cfg.epsilon);
    cfg.tde_search_ms = p.value("tde_search_ms", cfg.tde_search_ms);
    cfg.tde_bands = p.value("tde_bands", cfg.tde_bands);
  }
  if (j.contains("loss")) {
    const auto& p = j["loss"];
    reject_unknown(p, {"p", "alpha"}, "loss");
    cfg.loss_p = p.value("p", cfg.loss_p);
    cfg.loss_alpha = p.value("alpha", cfg.loss_alpha);
  }
  if (j.contains("train")) {
    const auto& p = j["train"];
    reject_unknown(p, {"steps", "lr", "clip_norm", "tdpf_width", "large_width"},
                   "train");
    cfg.train_steps = p.value("steps", cfg.train_steps);
    cfg.lr = p.value("lr", cfg.lr);
    cfg.clip_norm = p.value("clip_norm", cfg.clip_norm);
    cfg.tdpf_width = p.value("tdpf_width", cfg.tdpf_width);
    cfg.large_width = p.value("large_width", cfg.large_width);
  }
  if (j.contains("data")) {
    const auto& p = j["data"];
    reject_unknown(p, {"train_hours", "val_minutes", "test_clips",
                       "clip_seconds"},
                   "data");
    cfg.train_hours = p.value("train_hours", cfg.train_hours);
    cfg.val_minutes = p.value("val_minutes", cfg.val_minutes);
    cfg.test_clips = p.value("test_clips", cfg.test_clips);
    cfg.clip_seconds = p.value("clip_seconds", cfg.clip_seconds);
  }
  if (j.contains("embedding")) {
    const auto& p = j["embedding"];
    reject_unknown(p, {"provider", "file"}, "embedding");
    cfg.embedding_provider = p.value("provider", cfg.embedding_provider);
    cfg.embedding_file = p.value("file", cfg.embedding_file);
  }

  // Validation.
  if (cfg.taps_per_bin < 1) throw ConfigError("config: dsp.taps_per_bin must be >= 1");
  if (cfg.mu < 0.0) throw ConfigError("config: dsp.mu must be >= 0");
  if (cfg.epsilon <= 0.0) throw ConfigError("config: dsp.epsilon must be > 0");
  if (cfg.tde_bands < 1) throw ConfigError("config: dsp.tde_bands must be >= 1");
  if (!(cfg.loss_p > 0.0 && cfg.loss_p <= 1.0))
    throw ConfigError("config: loss.p must lie in (0,1]");
  if (!(cfg.loss_alpha >= 0.0 && cfg.loss_alpha <= 1.0))
    throw ConfigError("config: loss.alpha must lie in [0,1]");
  if (cfg.train_steps < 1) throw ConfigError("config: train.steps must be >= 1");
  if (cfg.lr <= 0.0) throw ConfigError("config: train.lr must be > 0");
  if (cfg.clip_seconds < 1.0)
    throw ConfigError("config: data.clip_seconds must be >= 1");
  if (cfg.embedding_provider != "stub" && cfg.embedding_provider != "file")
    throw ConfigError("config: embedding.provider must be stub or file");
  return cfg;
}

std::string apply_out_root(const std::string& path) {
  const char* root = std::getenv("PAEC_OUT_ROOT");
  if (root == nullptr || root[0] == '\0') return path;
  std::filesystem::path p(path);
  if (p.is_absolute()) return path;
  return (std::filesystem::path(root) / p).string();
}

} // namespace paec
