#pragma once
// Checkpoint directory: VERSION tag, config.json (full variant config),
// weights.bin (float blobs keyed by parameter path), optional optimizer.bin
// and meta.json (step counters). Writes go to a temp directory that is
// renamed into place.

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "paec/model.hpp"

namespace paec {

struct Checkpoint {
  ModelVariantConfig cfg;
  std::map<std::string, std::vector<float>> weights;
  // Adam state (absent when the checkpoint holds only weights).
  std::map<std::string, std::vector<float>> opt_m, opt_v;
  std::int64_t step = 0;
  std::int64_t adam_t = 0;
  std::string task; // pretraining task tag, informational
};

void save_checkpoint(const std::string& dir, const Checkpoint& ck);
Checkpoint load_checkpoint(const std::string& dir);
bool checkpoint_exists(const std::string& dir);

// Copies weights into the model. When from_prefix/to_prefix are set, only
// source names under from_prefix are considered and are renamed first
// ("s1" -> "s2" loads a single-stage pretrain into stage 2). Every remapped
// source name must exist in the model with a matching shape.
template <class S>
void apply_weights(TdpfModel<S>& model,
                   const std::map<std::string, std::vector<float>>& weights,
                   const std::string& from_prefix = "",
                   const std::string& to_prefix = "");

// Snapshot of the model's current weights.
std::map<std::string, std::vector<float>> snapshot_weights(
    const TdpfModel<float>& model);

// Config (de)serialization shared with the CLI.
std::string variant_config_to_json(const ModelVariantConfig& cfg);
ModelVariantConfig variant_config_from_json(const std::string& text);

} // namespace paec
