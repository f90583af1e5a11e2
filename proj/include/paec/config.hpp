#pragma once
// Experiment configuration file: JSON with a closed key set (unknown keys
// are rejected before anything runs). CLI flags override file values; the
// PAEC_OUT_ROOT environment variable re-roots relative output paths.

#include <string>

#include "paec/nlms.hpp"
#include "paec/tde.hpp"

namespace paec {

struct ExperimentConfig {
  // paths
  std::string corpus_dir;
  std::string data_dir = "data";
  std::string checkpoints_dir = "checkpoints";
  std::string reports_dir = "reports";
  // experiment
  std::string variant = "tdpf2";
  std::string strategy = "finetune";
  std::uint64_t seed = 0;
  // dsp
  int taps_per_bin = 10;
  double mu = 0.5;
  double epsilon = 1e-6;
  double tde_search_ms = 500.0;
  int tde_bands = 8;
  // loss
  double loss_p = 0.5;
  double loss_alpha = 0.5;
  // training
  int train_steps = 200;
  double lr = 1e-3;
  double clip_norm = 5.0;
  int tdpf_width = 92;
  int large_width = 144;
  // data synthesis (desk-scale defaults)
  double train_hours = 2.0;
  double val_minutes = 10.0;
  int test_clips = 200;
  double clip_seconds = 10.0;
  // embeddings
  std::string embedding_provider = "stub";
  std::string embedding_file;

  NlmsConfig nlms_config() const;
  TdeConfig tde_config() const;
};

// Parses and fully validates; throws ConfigError on unknown keys or bad
// values. Missing file => ConfigError.
ExperimentConfig load_experiment_config(const std::string& path);
ExperimentConfig default_experiment_config();

// Applies PAEC_OUT_ROOT to a relative output path.
std::string apply_out_root(const std::string& path);

} // namespace paec
