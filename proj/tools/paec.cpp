// paec: data synthesis, training, evaluation, inference, and spectrogram
// plotting for the personalized echo-cancellation lab.
//
// Exit codes: 0 success, 1 runtime failure, 2 usage/config error.

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>

#include <CLI11.hpp>

#include "paec/config.hpp"
#include "paec/corpus.hpp"
#include "paec/datagen.hpp"
#include "paec/dataset.hpp"
#include "paec/errors.hpp"
#include "paec/evaluator.hpp"
#include "paec/image.hpp"
#include "paec/metrics.hpp"
#include "paec/speaker.hpp"
#include "paec/trainer.hpp"
#include "paec/wavio.hpp"

namespace fs = std::filesystem;
using namespace paec;

namespace {

struct DatagenArgs {
  std::string config_path;
  std::string corpus, out;
  double hours = 2.0;
  double val_minutes = 10.0;
  int test_clips = 200;
  double clip_seconds = 10.0;
  std::uint64_t seed = 0;
};

void print_histogram(const char* label, const std::vector<double>& values,
                     double lo, double hi) {
  if (values.empty()) return;
  const int bins = 10;
  std::vector<int> counts(bins, 0);
  for (double v : values) {
    int b = static_cast<int>((v - lo) / (hi - lo) * bins);
    b = std::clamp(b, 0, bins - 1);
    ++counts[static_cast<std::size_t>(b)];
  }
  std::printf("%s histogram [%g, %g] dB:", label, lo, hi);
  for (int c : counts) std::printf(" %d", c);
  std::printf("\n");
}

int cmd_datagen(DatagenArgs args, const CLI::App* cmd) {
  if (!args.config_path.empty()) {
    const auto cfg = load_experiment_config(args.config_path);
    if (cmd->count("--corpus") == 0 && !cfg.corpus_dir.empty())
      args.corpus = cfg.corpus_dir;
    if (cmd->count("--out") == 0) args.out = cfg.data_dir;
    if (cmd->count("--hours") == 0) args.hours = cfg.train_hours;
    if (cmd->count("--val-minutes") == 0) args.val_minutes = cfg.val_minutes;
    if (cmd->count("--test-clips") == 0) args.test_clips = cfg.test_clips;
    if (cmd->count("--clip-seconds") == 0) args.clip_seconds = cfg.clip_seconds;
    if (cmd->count("--seed") == 0) args.seed = cfg.seed;
  }
  if (args.corpus.empty() || args.out.empty()) {
    std::fprintf(stderr, "datagen: --corpus and --out are required (flag or config)\n");
    return 2;
  }
  if (!fs::is_directory(args.corpus)) {
    std::fprintf(stderr, "datagen: corpus directory does not exist: %s\n",
                 args.corpus.c_str());
    return 2;
  }
  Corpus corpus(args.corpus);
  const auto& speakers = corpus.speakers();
  if (speakers.size() < 12) {
    std::fprintf(stderr,
                 "datagen: need at least 12 speakers for disjoint splits, "
                 "found %zu (try synth-corpus)\n",
                 speakers.size());
    return 2;
  }
  for (const auto& s : speakers)
    if (corpus.utterance_count(s) < 2) {
      std::fprintf(stderr,
                   "datagen: speaker %s needs at least 2 utterances "
                   "(enrollment must be disjoint)\n",
                   s.c_str());
      return 2;
    }

  const std::string out = apply_out_root(args.out);
  // Disjoint speaker pools: shuffled then split 60/20/20 (>= 4 each).
  std::vector<std::string> pool = speakers;
  std::mt19937_64 rng(args.seed ^ 0x5eedULL);
  std::shuffle(pool.begin(), pool.end(), rng);
  const std::size_t n = pool.size();
  std::size_t n_val = std::max<std::size_t>(4, n / 5);
  std::size_t n_test = std::max<std::size_t>(4, n / 5);
  const std::size_t n_train = n - n_val - n_test;
  std::vector<std::string> train_pool(pool.begin(), pool.begin() + n_train);
  std::vector<std::string> val_pool(pool.begin() + n_train,
                                    pool.begin() + n_train + n_val);
  std::vector<std::string> test_pool(pool.begin() + n_train + n_val, pool.end());

  const int train_clips = std::max(
      1, static_cast<int>(std::ceil(args.hours * 3600.0 / args.clip_seconds)));
  const int val_clips = std::max(
      1, static_cast<int>(std::ceil(args.val_minutes * 60.0 / args.clip_seconds)));

  struct Split {
    const char* name;
    int clips;
    std::vector<std::string>* pool;
    std::uint64_t seed;
  } splits[] = {
      {"train", train_clips, &train_pool, args.seed + 1},
      {"val", val_clips, &val_pool, args.seed + 2},
      {"test", args.test_clips, &test_pool, args.seed + 3},
  };

  for (const auto& split : splits) {
    auto specs = sample_specs(split.clips, split.seed, *split.pool);
    auto summary = write_dataset(corpus, specs, out, split.name, args.clip_seconds);
    std::printf("%s: %d clips (DT %.1f%% FEST %.1f%% NEST %.1f%%), "
                "|SER err| %.4f dB, |SNR err| %.4f dB -> %s\n",
                split.name, summary.clips, 100.0 * summary.dt / summary.clips,
                100.0 * summary.fest / summary.clips,
                100.0 * summary.nest / summary.clips, summary.mean_ser_abs_err,
                summary.mean_snr_abs_err, summary.manifest_path.c_str());
    std::vector<double> sers, snrs;
    for (const auto& sp : specs) {
      if (sp.scenario == Scenario::DT) sers.push_back(sp.ser_db);
      snrs.push_back(sp.snr_db);
    }
    print_histogram("  SER", sers, -15.0, 15.0);
    print_histogram("  SNR", snrs, -5.0, 25.0);
  }
  return 0;
}

int cmd_synth_corpus(const std::string& out, int speakers, int utterances,
                     double seconds, std::uint64_t seed) {
  make_synthetic_corpus(apply_out_root(out), speakers, utterances, seconds, seed);
  std::printf("wrote %d speakers x %d utterances (%.1f s) under %s\n", speakers,
              utterances, seconds, out.c_str());
  return 0;
}

struct TrainArgs {
  std::string config_path;
  std::string variant = "tdpf2";
  std::string strategy = "finetune";
  std::string manifest, data_root, out;
  std::string stage1, stage2;
  std::string loss_log;
  int steps = 200;
  double lr = 3e-4;
  std::uint64_t seed = 0;
  bool resume = false;
  int width = 92;
  int large_width = 144;
};

int cmd_train(TrainArgs args, const CLI::App* cmd) {
  ExperimentConfig cfg = default_experiment_config();
  if (!args.config_path.empty()) {
    cfg = load_experiment_config(args.config_path);
    if (cmd->count("--variant") == 0) args.variant = cfg.variant;
    if (cmd->count("--strategy") == 0) args.strategy = cfg.strategy;
    if (cmd->count("--steps") == 0) args.steps = cfg.train_steps;
    if (cmd->count("--lr") == 0) args.lr = cfg.lr;
    if (cmd->count("--seed") == 0) args.seed = cfg.seed;
    if (cmd->count("--width") == 0) args.width = cfg.tdpf_width;
    if (cmd->count("--large-width") == 0) args.large_width = cfg.large_width;
  }
  Variant variant;
  try {
    variant = variant_from_string(args.variant);
  } catch (const ParamError& e) {
    std::fprintf(stderr, "train: %s\n", e.what());
    return 2;
  }
  Strategy strategy;
  try {
    strategy = strategy_from_string(args.strategy);
  } catch (const ParamError& e) {
    std::fprintf(stderr, "train: %s\n", e.what());
    return 2;
  }

  ClipDataset ds(args.manifest,
                 args.data_root.empty() ? fs::path(args.manifest).parent_path().string()
                                        : args.data_root);
  TrainOptions opts;
  opts.max_steps = args.steps;
  opts.lr = args.lr;
  opts.seed = args.seed;
  opts.resume = args.resume;
  opts.loss_log_path = args.loss_log;
  opts.tdpf_width = args.width;
  opts.large_width = args.large_width;
  opts.clip_norm = cfg.clip_norm;
  opts.nlms = cfg.nlms_config();
  StrategySpec spec;
  spec.strategy = strategy;
  spec.stage1_checkpoint = args.stage1;
  spec.stage2_checkpoint = args.stage2;
  try {
    auto result = train_variant(variant, spec, ds, opts, apply_out_root(args.out));
    std::printf("trained %s (%s): %d steps, loss %.6f -> %.6f, checkpoint %s\n",
                args.variant.c_str(), args.strategy.c_str(), result.steps_run,
                result.initial_loss, result.final_loss,
                result.checkpoint_dir.c_str());
  } catch (const StrategyError& e) {
    std::fprintf(stderr, "train: %s\n", e.what());
    return 2;
  }
  return 0;
}

struct PretrainArgs {
  std::string task = "echo_map";
  std::string manifest, data_root, out, loss_log;
  int steps = 200;
  double lr = 1e-3;
  std::uint64_t seed = 0;
  bool resume = false;
  int width = 92;
};

int cmd_pretrain(const PretrainArgs& args) {
  TrainTask task;
  try {
    task = task_from_string(args.task);
  } catch (const ParamError& e) {
    std::fprintf(stderr, "pretrain: %s\n", e.what());
    return 2;
  }
  ClipDataset ds(args.manifest,
                 args.data_root.empty() ? fs::path(args.manifest).parent_path().string()
                                        : args.data_root);
  StageConfig stage;
  stage.width = args.width;
  TrainOptions opts;
  opts.max_steps = args.steps;
  opts.lr = args.lr;
  opts.seed = args.seed;
  opts.resume = args.resume;
  opts.loss_log_path = args.loss_log;
  auto result = pretrain_stage(stage, task, ds, opts, apply_out_root(args.out));
  std::printf("pretrained %s: %d steps, loss %.6f -> %.6f, checkpoint %s\n",
              args.task.c_str(), result.steps_run, result.initial_loss,
              result.final_loss, result.checkpoint_dir.c_str());
  return 0;
}

struct EvalArgs {
  std::vector<std::string> checkpoints;
  std::string manifest, data_root, out_base;
  std::string pesq_cmd;
  std::string provider = "stub";
  std::string embedding_file;
};

int cmd_eval(const EvalArgs& args) {
  ClipDataset ds(args.manifest,
                 args.data_root.empty() ? fs::path(args.manifest).parent_path().string()
                                        : args.data_root);
  auto provider = make_embedding_provider(args.provider, args.embedding_file);
  EvalOptions opts;
  opts.pesq_cmd = args.pesq_cmd;

  std::string all_tables, all_json = "[\n";
  for (std::size_t i = 0; i < args.checkpoints.size(); ++i) {
    auto report = evaluate_checkpoint(args.checkpoints[i], ds, *provider, opts);
    const auto table = report.table();
    std::fputs(table.c_str(), stdout);
    all_tables += table;
    all_json += report.to_json();
    all_json += i + 1 < args.checkpoints.size() ? ",\n" : "\n";
  }
  all_json += "]\n";
  if (!args.out_base.empty()) {
    const std::string base = apply_out_root(args.out_base);
    fs::create_directories(fs::path(base).parent_path().empty()
                               ? "."
                               : fs::path(base).parent_path().string());
    std::ofstream t(base + ".txt");
    t << all_tables;
    std::ofstream j(base + ".json");
    j << all_json;
    std::printf("reports written to %s.{txt,json}\n", base.c_str());
  }
  return 0;
}

struct InferArgs {
  std::string mic, ref, enroll, checkpoint, out;
  std::string dump_dir;
  std::string provider = "stub";
  std::string embedding_file;
  std::string speaker_id;
};

int cmd_infer(const InferArgs& args) {
  auto load = [](const std::string& path, const char* what) {
    int rate = 0;
    Waveform w = read_wav(path, &rate);
    if (rate != kSampleRate)
      std::fprintf(stderr, "infer: %s is %d Hz; resampled to 16 kHz\n", what, rate);
    return w;
  };
  Waveform mic = load(args.mic, "mic");
  Waveform ref = load(args.ref, "ref");
  Waveform enroll = load(args.enroll, "enroll");
  if (ref.size() < mic.size()) ref.samples.resize(mic.size(), 0.0);
  if (ref.size() > mic.size()) ref.samples.resize(mic.size());

  auto model = model_from_checkpoint(args.checkpoint);
  auto provider = make_embedding_provider(args.provider, args.embedding_file);

  Waveform e_sig, y_lin;
  if (rms(ref) > 1e-7 && ref.size() >= static_cast<std::size_t>(kSampleRate)) {
    auto delay = estimate_delay(mic, ref);
    std::printf("tde: delay %d samples (%.1f ms), confidence %.2f\n",
                delay.delay_samples, 1000.0 * delay.delay_samples / kSampleRate,
                delay.confidence);
    auto aligned = align_reference(ref, delay);
    auto nlms = nlms_run(mic, aligned);
    e_sig = std::move(nlms.e);
    y_lin = std::move(nlms.y_lin);
  } else {
    std::fprintf(stderr, "infer: silent reference; skipping linear stage\n");
    e_sig = mic;
    y_lin.samples.assign(mic.size(), 0.0);
  }

  bool needs_spk = model.config().two_stage();
  for (const auto& sc : model.config().stages)
    needs_spk = needs_spk || sc.speaker_conditioning;
  std::optional<SpeakerInputs<float>> spk;
  if (needs_spk) {
    auto emb = embed_speaker(enroll, *provider, args.speaker_id);
    spk = make_speaker_inputs<float>(enroll, emb.v);
  }
  StageOutput stages;
  Waveform out = model_forward(model, mic, e_sig, y_lin, spk ? &*spk : nullptr,
                               &stages);
  write_wav(apply_out_root(args.out), out);
  Waveform mic_trim = mic;
  mic_trim.samples.resize(out.size());
  std::printf("wrote %s (%zu samples); erle_db=%.2f\n", args.out.c_str(),
              out.size(), erle(mic_trim, out));

  if (!args.dump_dir.empty()) {
    const fs::path dir(apply_out_root(args.dump_dir));
    fs::create_directories(dir);
    const double peak = std::max(spectrogram_peak(stages.s2),
                                 stages.s1.n_frames > 0
                                     ? spectrogram_peak(stages.s1)
                                     : 0.0);
    if (stages.s1.n_frames > 0) {
      write_wav((dir / "stage1.wav").string(), istft(stages.s1));
      write_spectrogram_png((dir / "stage1.png").string(), stages.s1, peak);
    }
    write_wav((dir / "stage2.wav").string(), istft(stages.s2));
    write_spectrogram_png((dir / "stage2.png").string(), stages.s2, peak);
    std::printf("stage outputs dumped under %s\n", dir.string().c_str());
  }
  return 0;
}

int cmd_plot(const std::vector<std::string>& inputs, const std::string& out_dir) {
  const fs::path dir(apply_out_root(out_dir));
  fs::create_directories(dir);
  std::vector<Spectrogram> specs;
  double peak = 0.0;
  for (const auto& path : inputs) {
    auto w = read_wav(path);
    specs.push_back(stft(w));
    peak = std::max(peak, spectrogram_peak(specs.back()));
  }
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    const auto name = fs::path(inputs[i]).stem().string() + ".png";
    write_spectrogram_png((dir / name).string(), specs[i], peak);
    std::printf("%s\n", (dir / name).string().c_str());
  }
  return 0;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"personalized acoustic echo cancellation lab"};
  app.require_subcommand(1);

  // datagen
  DatagenArgs dg;
  auto* datagen = app.add_subcommand("datagen", "synthesize train/val/test sets");
  datagen->add_option("--config", dg.config_path, "experiment config JSON");
  datagen->add_option("--corpus", dg.corpus, "speech corpus directory");
  datagen->add_option("--out", dg.out, "output directory");
  datagen->add_option("--hours", dg.hours, "train hours");
  datagen->add_option("--val-minutes", dg.val_minutes, "validation minutes");
  datagen->add_option("--test-clips", dg.test_clips, "test clip count");
  datagen->add_option("--clip-seconds", dg.clip_seconds, "clip length");
  datagen->add_option("--seed", dg.seed, "random seed");

  // synth-corpus
  std::string sc_out;
  int sc_speakers = 18, sc_utts = 4;
  double sc_seconds = 12.0;
  std::uint64_t sc_seed = 0;
  auto* synthc = app.add_subcommand("synth-corpus", "write a synthetic speech corpus");
  synthc->add_option("--out", sc_out, "corpus directory")->required();
  synthc->add_option("--speakers", sc_speakers, "speaker count");
  synthc->add_option("--utterances", sc_utts, "utterances per speaker");
  synthc->add_option("--seconds", sc_seconds, "utterance length");
  synthc->add_option("--seed", sc_seed, "random seed");

  // pretrain
  PretrainArgs pt;
  auto* pretrain = app.add_subcommand("pretrain", "pretrain a single stage on its task");
  pretrain->add_option("--task", pt.task, "echo_map | aec_ns | pse");
  pretrain->add_option("--manifest", pt.manifest, "training manifest")->required();
  pretrain->add_option("--data-root", pt.data_root, "audio path root");
  pretrain->add_option("--out", pt.out, "checkpoint directory")->required();
  pretrain->add_option("--steps", pt.steps, "optimizer steps");
  pretrain->add_option("--lr", pt.lr, "learning rate");
  pretrain->add_option("--seed", pt.seed, "random seed");
  pretrain->add_option("--loss-log", pt.loss_log, "loss curve JSONL path");
  pretrain->add_option("--width", pt.width, "stage channel width");
  pretrain->add_flag("--resume", pt.resume, "resume from the output checkpoint");

  // train
  TrainArgs tr;
  auto* train = app.add_subcommand("train", "train a system variant");
  train->add_option("--config", tr.config_path, "experiment config JSON");
  train->add_option("--variant", tr.variant,
                    "gftnn_aec | gftnn_pse | gftnn_l | tdpf1 | tdpf2 | tdpf3");
  train->add_option("--strategy", tr.strategy,
                    "joint | joint_freeze | finetune | finetune_freeze");
  train->add_option("--manifest", tr.manifest, "training manifest")->required();
  train->add_option("--data-root", tr.data_root, "audio path root");
  train->add_option("--out", tr.out, "checkpoint directory")->required();
  train->add_option("--stage1", tr.stage1, "stage-1 pretrain checkpoint");
  train->add_option("--stage2", tr.stage2, "stage-2 pretrain checkpoint");
  train->add_option("--steps", tr.steps, "optimizer steps");
  train->add_option("--lr", tr.lr, "learning rate");
  train->add_option("--seed", tr.seed, "random seed");
  train->add_option("--loss-log", tr.loss_log, "loss curve JSONL path");
  train->add_option("--width", tr.width, "TDPF stage width");
  train->add_option("--large-width", tr.large_width, "GFTNN-L width");
  train->add_flag("--resume", tr.resume, "resume from the output checkpoint");

  // eval
  EvalArgs ev;
  auto* eval = app.add_subcommand("eval", "evaluate checkpoints on a test manifest");
  eval->add_option("--checkpoint", ev.checkpoints, "checkpoint directory (repeatable)")
      ->required();
  eval->add_option("--manifest", ev.manifest, "test manifest")->required();
  eval->add_option("--data-root", ev.data_root, "audio path root");
  eval->add_option("--out", ev.out_base, "report base path (.txt/.json)");
  eval->add_option("--pesq-cmd", ev.pesq_cmd,
                   "external scorer template with {ref} and {deg}");
  eval->add_option("--embedding-provider", ev.provider, "stub | file");
  eval->add_option("--embedding-file", ev.embedding_file, "speaker-id table");

  // infer
  InferArgs in;
  auto* infer = app.add_subcommand("infer", "run the pipeline on one utterance");
  infer->add_option("--mic", in.mic, "microphone WAV")->required();
  infer->add_option("--ref", in.ref, "far-end reference WAV")->required();
  infer->add_option("--enroll", in.enroll, "enrollment WAV")->required();
  infer->add_option("--checkpoint", in.checkpoint, "model checkpoint")->required();
  infer->add_option("--out", in.out, "output WAV")->required();
  infer->add_option("--dump-stages", in.dump_dir, "also write stage outputs here");
  infer->add_option("--embedding-provider", in.provider, "stub | file");
  infer->add_option("--embedding-file", in.embedding_file, "speaker-id table");
  infer->add_option("--speaker-id", in.speaker_id, "id for the file provider");

  // plot
  std::vector<std::string> plot_inputs;
  std::string plot_out = ".";
  auto* plot = app.add_subcommand("plot", "render log-magnitude spectrograms");
  plot->add_option("--out", plot_out, "output directory");
  plot->add_option("inputs", plot_inputs, "WAV files")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (*datagen) return cmd_datagen(dg, datagen);
    if (*synthc) return cmd_synth_corpus(sc_out, sc_speakers, sc_utts, sc_seconds, sc_seed);
    if (*pretrain) return cmd_pretrain(pt);
    if (*train) return cmd_train(tr, train);
    if (*eval) return cmd_eval(ev);
    if (*infer) return cmd_infer(in);
    if (*plot) return cmd_plot(plot_inputs, plot_out);
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const CorpusError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
