#pragma once
// Manifest-backed clip access for training and evaluation, plus the cached
// per-clip tensors (DSP front-end outputs and loss targets) that make
// repeated epochs over a small set cheap.

#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "paec/manifest.hpp"
#include "paec/model.hpp"
#include "paec/nlms.hpp"
#include "paec/signal.hpp"
#include "paec/tde.hpp"

namespace paec {

struct ClipAudio {
  Waveform d, s, y, v, z, enroll, ref;
  SceneSpec spec;
};

class ClipDataset {
 public:
  ClipDataset(const std::string& manifest_path, const std::string& audio_root);

  std::size_t size() const { return entries_.size(); }
  const ManifestEntry& entry(std::size_t i) const { return entries_[i]; }
  ClipAudio load(std::size_t i) const;

  // Indices whose clips carry echo (for echo-map / aec-ns pretraining) or
  // are echo-free (for pse pretraining).
  std::vector<std::size_t> with_echo() const;
  std::vector<std::size_t> echo_free() const;

 private:
  std::vector<ManifestEntry> entries_;
  std::string root_;
};

// Everything the trainer needs for one clip, precomputed once: the DSP
// front-end runs on (d, ref), targets come from the oracle components.
struct PreparedClip {
  CompressedSpectrogram d_c, e_c, y_c;  // network inputs
  CompressedSpectrogram s_t, y_t, sz_t; // loss targets (compressed)
  CompressedSpectrogram enroll_c;       // enrollment spectrum
  std::vector<double> fbank;            // 160-dim enrollment statistics
  std::vector<double> provider_emb;     // 256-dim stub-provider embedding
  Waveform y_wave;                      // oracle echo, for SI-SNR probes
};

class PreparedCache {
 public:
  PreparedCache(const ClipDataset& ds, NlmsConfig nlms_cfg, std::size_t capacity);
  const PreparedClip& get(std::size_t index);

 private:
  const ClipDataset& ds_;
  NlmsConfig nlms_cfg_;
  std::size_t capacity_;
  std::map<std::size_t, std::unique_ptr<PreparedClip>> cache_;
  std::vector<std::size_t> order_; // FIFO eviction
};

PreparedClip prepare_clip(const ClipAudio& clip, const NlmsConfig& nlms_cfg);

} // namespace paec
