#pragma once
// Per-scenario evaluation producing Table-style reports: ERLE on far-end
// single-talk, SI-SNR (and the external WB-PESQ hook when configured) on
// near-end single-talk, the PESQ hook on double-talk.

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "paec/dataset.hpp"
#include "paec/model.hpp"
#include "paec/speaker.hpp"

namespace paec {

struct EvalOptions {
  // External scorer command with {ref} and {deg} placeholders; it must print
  // a single float. Empty = column reported unavailable.
  std::string pesq_cmd;
  NlmsConfig nlms;
  std::string work_dir; // scratch space for hook WAVs
};

struct EvalCell {
  double mean = 0.0;
  int count = 0;
  bool available = false;
};

struct EvalReport {
  std::string label;
  double params_millions = 0.0;
  EvalCell fest_erle;
  EvalCell dt_pesq;
  EvalCell nest_pesq;
  EvalCell nest_sisnr;
  int skipped = 0;

  std::string table() const;  // aligned text table
  std::string to_json() const;
};

// The processing pipeline under test: clip audio in, enhanced waveform out.
using PipelineFn = std::function<Waveform(const ClipAudio&)>;

EvalReport evaluate_pipeline(const PipelineFn& pipeline, const ClipDataset& ds,
                             const EvalOptions& opts, const std::string& label);

// Standard pipeline: TDE + NLMS front-end, then the model.
PipelineFn make_model_pipeline(TdpfModel<float>& model,
                               EmbeddingProvider& provider,
                               const NlmsConfig& nlms_cfg);

EvalReport evaluate_checkpoint(const std::string& checkpoint_dir,
                               const ClipDataset& ds, EmbeddingProvider& provider,
                               const EvalOptions& opts);

// Runs the hook command; returns the parsed score or nullopt on failure.
std::optional<double> run_score_hook(const std::string& cmd_template,
                                     const std::string& ref_wav,
                                     const std::string& deg_wav);

} // namespace paec
