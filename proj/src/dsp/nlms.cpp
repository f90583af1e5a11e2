#include "paec/nlms.hpp"

#include <algorithm>

#include "paec/errors.hpp"

namespace paec {

NlmsState::NlmsState(const NlmsConfig& cfg, int n_bins)
    : cfg_(cfg), n_bins_(n_bins) {
  if (cfg.taps_per_bin < 1) throw ParamError("nlms: taps_per_bin must be >= 1");
  if (cfg.mu < 0.0) throw ParamError("nlms: negative step size");
  if (cfg.epsilon <= 0.0) throw ParamError("nlms: epsilon must be positive");
  taps_.assign(static_cast<std::size_t>(n_bins_) * cfg.taps_per_bin, {});
  history_.assign(taps_.size(), {});
}

void NlmsState::process_frame(const std::complex<double>* mic,
                              const std::complex<double>* ref,
                              std::complex<double>* y_hat,
                              std::complex<double>* err) {
  const int taps = cfg_.taps_per_bin;
  for (int k = 0; k < n_bins_; ++k) {
    std::complex<double>* hist = history_.data() + static_cast<std::size_t>(k) * taps;
    std::complex<double>* w = taps_.data() + static_cast<std::size_t>(k) * taps;
    // Shift newest reference frame into the history head.
    for (int i = taps - 1; i > 0; --i) hist[i] = hist[i - 1];
    hist[0] = ref[k];

    std::complex<double> est = 0.0;
    double norm = cfg_.epsilon;
    for (int i = 0; i < taps; ++i) {
      est += w[i] * hist[i];
      norm += std::norm(hist[i]);
    }
    const std::complex<double> e = mic[k] - est;
    const double step = cfg_.mu / norm;
    for (int i = 0; i < taps; ++i) w[i] += step * e * std::conj(hist[i]);

    y_hat[k] = est;
    err[k] = e;
  }
  ++frames_seen_;
}

NlmsOutput nlms_run(const Waveform& mic, const Waveform& aligned_ref,
                    const NlmsConfig& cfg) {
  if (mic.size() != aligned_ref.size())
    throw ShapeError("nlms_run: mic and reference lengths differ");

  const auto mic_spec = stft(mic, cfg.stft);
  const auto ref_spec = stft(aligned_ref, cfg.stft);
  const int n_bins = mic_spec.n_bins();

  Spectrogram y_spec, e_spec;
  y_spec.cfg = e_spec.cfg = cfg.stft;
  y_spec.n_frames = e_spec.n_frames = mic_spec.n_frames;
  y_spec.bins.assign(mic_spec.bins.size(), {});
  e_spec.bins.assign(mic_spec.bins.size(), {});

  NlmsState state(cfg, n_bins);
  for (int t = 0; t < mic_spec.n_frames; ++t)
    state.process_frame(&mic_spec.at(t, 0), &ref_spec.at(t, 0),
                        &y_spec.at(t, 0), &e_spec.at(t, 0));

  Waveform y = istft(y_spec);
  Waveform e = istft(e_spec);
  // Outside the covered span there is no estimate: e carries the mic signal.
  y.samples.resize(mic.size(), 0.0);
  e.samples.resize(mic.size(), 0.0);
  const std::size_t covered = stft_covered_samples(mic_spec.n_frames, cfg.stft);
  for (std::size_t i = covered; i < mic.size(); ++i) {
    y.samples[i] = 0.0;
    e.samples[i] = mic.samples[i];
  }
  // Sample 0 sits at the analysis window's zero and cannot be synthesized.
  if (!mic.empty()) e.samples[0] = mic.samples[0] - y.samples[0];
  return {std::move(y), std::move(e)};
}

} // namespace paec
