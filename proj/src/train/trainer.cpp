#include "paec/trainer.hpp"

#include <algorithm>
#include <fstream>
#include <random>

#include <json.hpp>

#include "paec/metrics.hpp"

namespace paec {
namespace {

enum class Binding { target_s, target_y, target_sz, pair_tdpf2, pair_tdpf3 };

Binding binding_for_variant(Variant v) {
  switch (v) {
    case Variant::gftnn_aec: return Binding::target_sz;
    case Variant::gftnn_pse:
    case Variant::gftnn_l:
    case Variant::tdpf1: return Binding::target_s;
    case Variant::tdpf2: return Binding::pair_tdpf2;
    case Variant::tdpf3: return Binding::pair_tdpf3;
  }
  return Binding::target_s;
}

Binding binding_for_task(TrainTask t) {
  switch (t) {
    case TrainTask::echo_map: return Binding::target_y;
    case TrainTask::aec_ns: return Binding::target_sz;
    case TrainTask::pse: return Binding::target_s;
  }
  return Binding::target_s;
}

SpeakerInputs<float> spk_inputs(const PreparedClip& pc) {
  SpeakerInputs<float> spk;
  spk.enrollment = grid_from_spec<float>(pc.enroll_c);
  Tensor<float> fb({1, 160});
  for (int i = 0; i < 160; ++i) fb.v[static_cast<std::size_t>(i)] =
      static_cast<float>(pc.fbank[static_cast<std::size_t>(i)]);
  Tensor<float> pv({1, 256});
  for (int i = 0; i < 256; ++i) pv.v[static_cast<std::size_t>(i)] =
      static_cast<float>(pc.provider_emb[static_cast<std::size_t>(i)]);
  spk.fbank = constant<float>(std::move(fb));
  spk.provider = constant<float>(std::move(pv));
  return spk;
}

bool model_needs_speaker(const TdpfModel<float>& model) {
  for (const auto& sc : model.config().stages)
    if (sc.speaker_conditioning) return true;
  return model.config().two_stage();
}

struct LossTerms {
  Var<float> total, term1, term2;
};

LossTerms loss_for_binding(Binding binding, const TdpfModel<float>::Forward& fwd,
                           const TrainTargets<float>& targets,
                           const LossSpec& spec) {
  LossTerms out;
  switch (binding) {
    case Binding::target_s:
      out.total = plcpa_term<float>(targets.s_c, fwd.s2, spec);
      break;
    case Binding::target_y:
      out.total = plcpa_term<float>(targets.y_c, fwd.s2, spec);
      break;
    case Binding::target_sz:
      out.total = plcpa_term<float>(targets.sz_c, fwd.s2, spec);
      break;
    case Binding::pair_tdpf2:
      out.term1 = plcpa_term<float>(targets.y_c, fwd.s1, spec);
      out.term2 = plcpa_term<float>(targets.s_c, fwd.s2, spec);
      out.total = add(out.term1, out.term2);
      break;
    case Binding::pair_tdpf3:
      out.term1 = plcpa_term<float>(targets.sz_c, fwd.s1, spec);
      out.term2 = plcpa_term<float>(targets.s_c, fwd.s2, spec);
      out.total = add(out.term1, out.term2);
      break;
  }
  return out;
}

TrainTargets<float> targets_from_prepared(const PreparedClip& pc) {
  TrainTargets<float> t;
  t.s_c = grid_from_spec<float>(pc.s_t);
  t.y_c = grid_from_spec<float>(pc.y_t);
  t.sz_c = grid_from_spec<float>(pc.sz_t);
  return t;
}

LossTerms forward_loss(TdpfModel<float>& model, const PreparedClip& pc,
                       Binding binding, const LossSpec& spec) {
  auto d = grid_from_spec<float>(pc.d_c);
  auto e = grid_from_spec<float>(pc.e_c);
  auto y = grid_from_spec<float>(pc.y_c);
  std::optional<SpeakerInputs<float>> spk;
  if (model_needs_speaker(model)) spk = spk_inputs(pc);
  auto fwd = model.forward(d, e, y, spk ? &*spk : nullptr);
  return loss_for_binding(binding, fwd, targets_from_prepared(pc), spec);
}

// Mean no-grad loss over a set of clips.
double dataset_loss(TdpfModel<float>& model, PreparedCache& cache,
                    const std::vector<std::size_t>& indices, Binding binding,
                    const LossSpec& spec) {
  double acc = 0.0;
  for (std::size_t i : indices)
    acc += forward_loss(model, cache.get(i), binding, spec).total.val().v[0];
  return acc / static_cast<double>(indices.size());
}

struct RunConfig {
  Binding binding;
  std::vector<std::size_t> indices;
  std::vector<std::string> freeze_prefixes;
  std::string task_tag;
};

TrainResult run_training(TdpfModel<float>& model, const RunConfig& rc,
                         const ClipDataset& dataset, const TrainOptions& opts,
                         const std::string& out_dir, std::int64_t start_step,
                         Adam& adam) {
  if (rc.indices.empty())
    throw ConfigError("training: dataset has no clips compatible with the task");
  PreparedCache cache(dataset, opts.nlms, opts.cache_capacity);
  const LossSpec spec;

  // Freezing removes the parameters from the gradient graph entirely.
  for (auto& [name, node] : model.params().all())
    if (adam.frozen(name)) node->requires_grad = false;

  std::ofstream log;
  if (!opts.loss_log_path.empty()) {
    log.open(opts.loss_log_path, start_step > 0 ? std::ios::app : std::ios::out);
    if (!log) throw IoError("training: cannot open loss log " + opts.loss_log_path);
  }

  TrainResult result;
  result.initial_loss = dataset_loss(model, cache, rc.indices, rc.binding, spec);

  std::vector<std::size_t> order = rc.indices;
  std::int64_t step = start_step;
  const std::int64_t max_steps = opts.max_steps;
  bool stopped = false;
  while (step < max_steps && !stopped) {
    const std::uint64_t epoch = static_cast<std::uint64_t>(step) / order.size();
    std::mt19937_64 erng(opts.seed ^ (epoch * 0x9e3779b97f4a7c15ULL + 1));
    std::shuffle(order.begin(), order.end(), erng);
    for (std::size_t pos = static_cast<std::size_t>(step) % order.size();
         pos < order.size() && step < max_steps; ++pos) {
      const PreparedClip& pc = cache.get(order[pos]);
      model.params().zero_grads();
      double t1 = 0.0, t2 = 0.0, total = 0.0;
      {
        Tape<float> tape;
        auto terms = forward_loss(model, pc, rc.binding, spec);
        total = terms.total.val().v[0];
        if (terms.term1.defined()) t1 = terms.term1.val().v[0];
        if (terms.term2.defined()) t2 = terms.term2.val().v[0];
        tape.backward(terms.total.n);
      }
      adam.step();
      ++step;
      if (log.is_open() && (step % 10 == 0 || step == max_steps)) {
        nlohmann::json j{{"step", step}, {"term1", t1}, {"term2", t2},
                         {"total", total}};
        log << j.dump() << '\n';
        log.flush();
      }
      if (opts.checkpoint_every > 0 && step % opts.checkpoint_every == 0) {
        Checkpoint ck;
        ck.cfg = model.config();
        ck.weights = snapshot_weights(model);
        ck.opt_m = adam.state_m();
        ck.opt_v = adam.state_v();
        ck.step = step;
        ck.adam_t = adam.t();
        ck.task = rc.task_tag;
        save_checkpoint(out_dir, ck);
      }
      const bool check_now = step % 25 == 0 || step == max_steps;
      if (check_now) {
        if (opts.stop_fraction > 0.0) {
          const double cur =
              dataset_loss(model, cache, rc.indices, rc.binding, spec);
          if (cur <= opts.stop_fraction * result.initial_loss) {
            stopped = true;
          }
        }
        if (opts.probe && opts.probe(static_cast<int>(step), total, model))
          stopped = true;
        if (stopped) break;
      }
    }
  }

  result.final_loss = dataset_loss(model, cache, rc.indices, rc.binding, spec);
  result.steps_run = static_cast<int>(step - start_step);
  result.checkpoint_dir = out_dir;

  Checkpoint ck;
  ck.cfg = model.config();
  ck.weights = snapshot_weights(model);
  ck.opt_m = adam.state_m();
  ck.opt_v = adam.state_v();
  ck.step = step;
  ck.adam_t = adam.t();
  ck.task = rc.task_tag;
  save_checkpoint(out_dir, ck);
  return result;
}

StageConfig stage_for_task(const StageConfig& base, TrainTask task) {
  StageConfig sc = base;
  switch (task) {
    case TrainTask::echo_map:
      sc.in_channels = 3;
      sc.speaker_conditioning = false;
      sc.output_mode = OutputMode::map;
      break;
    case TrainTask::aec_ns:
      sc.in_channels = 3;
      sc.speaker_conditioning = false;
      sc.output_mode = OutputMode::mask;
      break;
    case TrainTask::pse:
      sc.in_channels = 4;
      sc.speaker_conditioning = true;
      sc.output_mode = OutputMode::mask;
      break;
  }
  return sc;
}

} // namespace

TrainResult pretrain_stage(const StageConfig& stage_cfg, TrainTask task,
                           const ClipDataset& dataset, const TrainOptions& opts,
                           const std::string& out_dir) {
  ModelVariantConfig cfg;
  // The single stage keeps the variant label of the system it feeds.
  cfg.variant = task == TrainTask::aec_ns ? Variant::gftnn_aec
                : task == TrainTask::pse ? Variant::gftnn_pse
                                         : Variant::tdpf2;
  cfg.stages = {stage_for_task(stage_cfg, task)};

  RunConfig rc;
  rc.binding = binding_for_task(task);
  rc.indices = task == TrainTask::pse ? dataset.echo_free() : dataset.with_echo();
  rc.task_tag = to_string(task);
  if (rc.indices.empty())
    throw ConfigError(std::string("pretrain: no clips suitable for task ") +
                      to_string(task));

  TdpfModel<float> model(cfg, opts.seed);
  std::int64_t start_step = 0;
  AdamConfig acfg;
  acfg.lr = opts.lr;
  acfg.clip_norm = opts.clip_norm;
  Adam adam(model.params(), acfg);
  if (opts.resume && checkpoint_exists(out_dir)) {
    auto ck = load_checkpoint(out_dir);
    apply_weights(model, ck.weights);
    adam.restore(ck.opt_m, ck.opt_v, ck.adam_t);
    start_step = ck.step;
  }
  return run_training(model, rc, dataset, opts, out_dir, start_step, adam);
}

TrainResult train_variant(Variant variant, const StrategySpec& strategy,
                          const ClipDataset& dataset, const TrainOptions& opts,
                          const std::string& out_dir) {
  ModelVariantConfig cfg =
      default_variant_config(variant, opts.tdpf_width, opts.large_width);
  for (auto& sc : cfg.stages) {
    sc.ftlstm_hidden = opts.ftlstm_hidden;
    sc.spk_bilstm_hidden = opts.spk_bilstm_hidden;
    sc.mca_dim = opts.mca_dim;
    sc.mca_heads = opts.mca_heads;
  }
  TdpfModel<float> model(cfg, opts.seed);

  std::vector<std::string> freeze;
  if (cfg.two_stage()) {
    if (strategy.stage1_checkpoint.empty() ||
        !checkpoint_exists(strategy.stage1_checkpoint))
      throw StrategyError("train: strategy " +
                          std::string(to_string(strategy.strategy)) +
                          " needs a stage-1 pretrain checkpoint (missing: '" +
                          strategy.stage1_checkpoint + "')");
    apply_weights(model, load_checkpoint(strategy.stage1_checkpoint).weights,
                  "s1", "s1");
    const bool finetune = strategy.strategy == Strategy::finetune ||
                          strategy.strategy == Strategy::finetune_freeze;
    if (finetune) {
      if (strategy.stage2_checkpoint.empty() ||
          !checkpoint_exists(strategy.stage2_checkpoint))
        throw StrategyError("train: strategy " +
                            std::string(to_string(strategy.strategy)) +
                            " needs a stage-2 pretrain checkpoint (missing: '" +
                            strategy.stage2_checkpoint + "')");
      apply_weights(model, load_checkpoint(strategy.stage2_checkpoint).weights,
                    "s1", "s2");
    }
    if (strategy.strategy == Strategy::joint_freeze ||
        strategy.strategy == Strategy::finetune_freeze)
      freeze.push_back("s1.");
  } else if (!strategy.stage1_checkpoint.empty()) {
    apply_weights(model, load_checkpoint(strategy.stage1_checkpoint).weights,
                  "s1", "s1");
  }

  RunConfig rc;
  rc.binding = binding_for_variant(variant);
  rc.indices.resize(dataset.size());
  for (std::size_t i = 0; i < dataset.size(); ++i) rc.indices[i] = i;
  rc.freeze_prefixes = freeze;
  rc.task_tag = to_string(variant);

  std::int64_t start_step = 0;
  AdamConfig acfg;
  acfg.lr = opts.lr;
  acfg.clip_norm = opts.clip_norm;
  Adam adam(model.params(), acfg, freeze);
  if (opts.resume && checkpoint_exists(out_dir)) {
    auto ck = load_checkpoint(out_dir);
    apply_weights(model, ck.weights);
    adam.restore(ck.opt_m, ck.opt_v, ck.adam_t);
    start_step = ck.step;
  }
  return run_training(model, rc, dataset, opts, out_dir, start_step, adam);
}

TdpfModel<float> model_from_checkpoint(const std::string& dir) {
  auto ck = load_checkpoint(dir);
  TdpfModel<float> model(ck.cfg, 0);
  apply_weights(model, ck.weights);
  return model;
}

VariantLossValue eval_clip_loss(TdpfModel<float>& model, const PreparedClip& pc,
                                const LossSpec& spec) {
  auto terms = forward_loss(model, pc, binding_for_variant(model.config().variant),
                            spec);
  VariantLossValue out;
  out.total = terms.total.val().v[0];
  if (terms.term1.defined()) {
    out.term1 = terms.term1.val().v[0];
    out.term2 = terms.term2.val().v[0];
    out.two_term = true;
  }
  return out;
}

double stage1_sisnr_vs_y(TdpfModel<float>& model, const PreparedClip& pc) {
  auto d = grid_from_spec<float>(pc.d_c);
  auto e = grid_from_spec<float>(pc.e_c);
  auto y = grid_from_spec<float>(pc.y_c);
  std::optional<SpeakerInputs<float>> spk;
  if (model_needs_speaker(model)) spk = spk_inputs(pc);
  auto fwd = model.forward(d, e, y, spk ? &*spk : nullptr);
  const auto& grid = fwd.s1.defined() ? fwd.s1 : fwd.s2;
  auto wave = istft(power_decompress(spec_from_grid(grid, 0.5, pc.d_c.grid.cfg)));
  Waveform target = pc.y_wave;
  target.samples.resize(std::min(target.size(), wave.size()));
  wave.samples.resize(target.size());
  return si_snr(wave, target);
}

} // namespace paec
