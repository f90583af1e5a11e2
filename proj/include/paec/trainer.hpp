#pragma once
// Adam optimization over a ParamStore, stage pretraining, and the four
// training strategies (joint / joint_freeze / finetune / finetune_freeze).
// Frozen parameters are excluded from the gradient graph entirely, so their
// weights stay bit-identical and no gradient ever reaches them.

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "paec/checkpoint.hpp"
#include "paec/dataset.hpp"
#include "paec/loss.hpp"
#include "paec/model.hpp"

namespace paec {

enum class TrainTask { echo_map, aec_ns, pse };
enum class Strategy { joint, joint_freeze, finetune, finetune_freeze };

const char* to_string(Strategy s);
Strategy strategy_from_string(const std::string& s);
const char* to_string(TrainTask t);
TrainTask task_from_string(const std::string& s);

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double clip_norm = 5.0;
};

class Adam {
 public:
  Adam(ParamStore<float>& params, AdamConfig cfg,
       std::vector<std::string> freeze_prefixes = {});

  void step();
  std::int64_t t() const { return t_; }

  bool frozen(const std::string& name) const;
  // Checkpoint plumbing.
  std::map<std::string, std::vector<float>> state_m() const;
  std::map<std::string, std::vector<float>> state_v() const;
  void restore(const std::map<std::string, std::vector<float>>& m,
               const std::map<std::string, std::vector<float>>& v,
               std::int64_t t);

 private:
  ParamStore<float>& params_;
  AdamConfig cfg_;
  std::vector<std::string> freeze_;
  std::map<std::string, std::vector<float>> m_, v_;
  std::int64_t t_ = 0;
};

struct TrainOptions {
  int max_steps = 200;
  double lr = 1e-3;
  double clip_norm = 5.0;
  std::uint64_t seed = 0;
  std::string loss_log_path; // JSONL {step, term1, term2, total}; empty = off
  int checkpoint_every = 0;  // 0 = only at the end
  // Early stop once total loss <= stop_fraction * initial loss (<=0 = off).
  double stop_fraction = -1.0;
  // Extra periodic probe (every 25 steps); return true to stop early.
  std::function<bool(int step, double total_loss, TdpfModel<float>& model)> probe;
  NlmsConfig nlms;
  std::size_t cache_capacity = 64;
  bool resume = false;
  // Stage hyperparameters for train_variant (defaults match the published
  // budgets; smoke tests shrink them).
  int tdpf_width = 92;
  int large_width = 144;
  int ftlstm_hidden = 128;
  int spk_bilstm_hidden = 160;
  int mca_dim = 128;
  int mca_heads = 8;
};

struct TrainResult {
  std::string checkpoint_dir;
  double initial_loss = 0.0;
  double final_loss = 0.0;
  int steps_run = 0;
};

// Single-stage pretraining. The stage is wrapped as a one-stage model;
// echo_map predicts the echo spectrum, aec_ns predicts speech+interference,
// pse extracts the near-end speaker on echo-free clips.
TrainResult pretrain_stage(const StageConfig& stage_cfg, TrainTask task,
                           const ClipDataset& dataset, const TrainOptions& opts,
                           const std::string& out_dir);

struct StrategySpec {
  Strategy strategy = Strategy::finetune;
  std::string stage1_checkpoint; // required by every strategy
  std::string stage2_checkpoint; // required by finetune variants
};

TrainResult train_variant(Variant variant, const StrategySpec& strategy,
                          const ClipDataset& dataset, const TrainOptions& opts,
                          const std::string& out_dir);

// Loads a model from a checkpoint directory (weights only).
TdpfModel<float> model_from_checkpoint(const std::string& dir);

// One forward/loss evaluation of a clip under a variant binding; no update.
VariantLossValue eval_clip_loss(TdpfModel<float>& model, const PreparedClip& pc,
                                const LossSpec& spec = {});

// SI-SNR (dB) of the synthesized stage-1 output against the oracle echo.
double stage1_sisnr_vs_y(TdpfModel<float>& model, const PreparedClip& pc);

} // namespace paec
