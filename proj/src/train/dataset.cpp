#include "paec/dataset.hpp"

#include <algorithm>

#include "paec/errors.hpp"
#include "paec/speaker.hpp"
#include "paec/wavio.hpp"

namespace paec {

ClipDataset::ClipDataset(const std::string& manifest_path,
                         const std::string& audio_root)
    : entries_(read_manifest(manifest_path)), root_(audio_root) {}

ClipAudio ClipDataset::load(std::size_t i) const {
  if (i >= entries_.size()) throw ParamError("dataset: index out of range");
  const ManifestEntry& e = entries_[i];
  auto get = [&](const char* key) -> Waveform {
    auto it = e.paths.find(key);
    if (it == e.paths.end())
      throw IoError("dataset: clip " + e.spec.id + " missing path for '" +
                    std::string(key) + "'");
    return read_wav(resolve_audio_path(root_, it->second));
  };
  ClipAudio clip;
  clip.d = get("d");
  clip.s = get("s");
  clip.y = get("y");
  clip.v = get("v");
  clip.z = get("z");
  clip.enroll = get("enroll");
  clip.ref = get("ref");
  clip.spec = e.spec;
  return clip;
}

std::vector<std::size_t> ClipDataset::with_echo() const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < entries_.size(); ++i)
    if (entries_[i].spec.scenario != Scenario::NEST) out.push_back(i);
  return out;
}

std::vector<std::size_t> ClipDataset::echo_free() const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < entries_.size(); ++i)
    if (entries_[i].spec.scenario == Scenario::NEST) out.push_back(i);
  return out;
}

PreparedClip prepare_clip(const ClipAudio& clip, const NlmsConfig& nlms_cfg) {
  PreparedClip pc;
  // DSP front-end on (mic, loudspeaker reference).
  Waveform e_sig, y_lin;
  const double ref_rms = rms(clip.ref);
  if (ref_rms > 1e-7 && clip.ref.size() >= static_cast<std::size_t>(kSampleRate)) {
    auto delay = estimate_delay(clip.d, clip.ref);
    auto aligned = align_reference(clip.ref, delay);
    auto out = nlms_run(clip.d, aligned, nlms_cfg);
    e_sig = std::move(out.e);
    y_lin = std::move(out.y_lin);
  } else {
    e_sig = clip.d;
    y_lin.samples.assign(clip.d.size(), 0.0);
  }

  const StftConfig cfg{};
  const double p = 0.5;
  pc.d_c = power_compress(stft(clip.d, cfg), p);
  pc.e_c = power_compress(stft(e_sig, cfg), p);
  pc.y_c = power_compress(stft(y_lin, cfg), p);
  pc.s_t = power_compress(stft(clip.s.empty() ? Waveform(std::vector<double>(
                                                    clip.d.size(), 0.0))
                                              : clip.s,
                               cfg),
                          p);
  pc.y_t = power_compress(stft(clip.y.empty() ? Waveform(std::vector<double>(
                                                    clip.d.size(), 0.0))
                                              : clip.y,
                               cfg),
                          p);
  Waveform sz(std::vector<double>(clip.d.size(), 0.0));
  for (std::size_t i = 0; i < sz.size(); ++i) {
    if (i < clip.s.size()) sz.samples[i] += clip.s.samples[i];
    if (i < clip.z.size()) sz.samples[i] += clip.z.samples[i];
  }
  pc.sz_t = power_compress(stft(sz, cfg), p);
  pc.enroll_c = power_compress(stft(clip.enroll, cfg), p);
  pc.fbank = compute_fbank_stats(clip.enroll).v;
  pc.y_wave = clip.y;
  // Training conditioning always comes from the deterministic stub provider.
  static StubEmbeddingProvider stub;
  pc.provider_emb = stub.embed(clip.enroll, clip.spec.near_speaker).v;
  return pc;
}

PreparedCache::PreparedCache(const ClipDataset& ds, NlmsConfig nlms_cfg,
                             std::size_t capacity)
    : ds_(ds), nlms_cfg_(nlms_cfg), capacity_(capacity == 0 ? 1 : capacity) {}

const PreparedClip& PreparedCache::get(std::size_t index) {
  auto it = cache_.find(index);
  if (it != cache_.end()) return *it->second;
  if (cache_.size() >= capacity_) {
    const std::size_t victim = order_.front();
    order_.erase(order_.begin());
    cache_.erase(victim);
  }
  auto pc = std::make_unique<PreparedClip>(prepare_clip(ds_.load(index), nlms_cfg_));
  const PreparedClip& ref = *pc;
  cache_[index] = std::move(pc);
  order_.push_back(index);
  return ref;
}

} // namespace paec
