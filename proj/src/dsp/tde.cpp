#include "paec/tde.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "paec/errors.hpp"
#include "paec/kernels.hpp"
#include "paec/spectral.hpp"

namespace paec {
namespace {

// (band, frame) magnitude envelopes from contiguous bin groups.
std::vector<std::vector<double>> band_envelopes(const Spectrogram& spec,
                                                int bands) {
  const int n_bins = spec.n_bins();
  std::vector<std::vector<double>> env(bands,
                                       std::vector<double>(spec.n_frames, 0.0));
  for (int b = 0; b < bands; ++b) {
    const int k0 = b * n_bins / bands;
    const int k1 = (b + 1) * n_bins / bands;
    for (int t = 0; t < spec.n_frames; ++t) {
      double acc = 0.0;
      for (int k = k0; k < k1; ++k) acc += std::abs(spec.at(t, k));
      env[b][t] = acc;
    }
  }
  return env;
}

// Pearson correlation between mic[t+lag] and ref[t] over the overlap.
double lag_correlation(const std::vector<double>& mic,
                       const std::vector<double>& ref, int lag) {
  const int n = static_cast<int>(mic.size()) - lag;
  if (n < 8) return 0.0;
  double mm = 0.0, mr = 0.0;
  for (int t = 0; t < n; ++t) {
    mm += mic[t + lag];
    mr += ref[t];
  }
  mm /= n;
  mr /= n;
  double num = 0.0, dm = 0.0, dr = 0.0;
  for (int t = 0; t < n; ++t) {
    const double a = mic[t + lag] - mm;
    const double b = ref[t] - mr;
    num += a * b;
    dm += a * a;
    dr += b * b;
  }
  const double den = std::sqrt(dm * dr);
  return den > 0.0 ? num / den : 0.0;
}

} // namespace

DelayEstimate estimate_delay(const Waveform& mic, const Waveform& ref,
                             const TdeConfig& cfg) {
  if (mic.size() < static_cast<std::size_t>(kSampleRate) ||
      ref.size() < static_cast<std::size_t>(kSampleRate))
    throw DurationError("estimate_delay: signals must be at least 1 s long");
  if (cfg.bands < 1) throw ParamError("estimate_delay: bands must be >= 1");

  const double ref_energy = kernels::sumsq(ref.samples.data(), ref.size());
  if (ref_energy / ref.size() < cfg.ref_energy_floor)
    return {0, 0.0}; // no usable reference signal

  const StftConfig stft_cfg{};
  const auto mic_spec = stft(mic, stft_cfg);
  const auto ref_spec = stft(ref, stft_cfg);
  const auto mic_env = band_envelopes(mic_spec, cfg.bands);
  const auto ref_env = band_envelopes(ref_spec, cfg.bands);

  const int max_lag_frames = std::min(
      static_cast<int>(cfg.search_ms / 1000.0 * kSampleRate / stft_cfg.hop),
      mic_spec.n_frames - 1);
  int best_lag = 0;
  double best_score = -1e18;
  for (int lag = 0; lag <= max_lag_frames; ++lag) {
    double score = 0.0;
    for (int b = 0; b < cfg.bands; ++b)
      score += lag_correlation(mic_env[b], ref_env[b], lag);
    if (score > best_score) {
      best_score = score;
      best_lag = lag;
    }
  }
  DelayEstimate est;
  est.delay_samples = best_lag * stft_cfg.hop;
  est.confidence = std::clamp(best_score / cfg.bands, 0.0, 1.0);
  return est;
}

Waveform align_reference(const Waveform& ref, const DelayEstimate& d) {
  if (d.delay_samples < 0)
    throw ParamError("align_reference: negative delay");
  Waveform out;
  out.sample_rate = ref.sample_rate;
  out.samples.assign(ref.size(), 0.0);
  const std::size_t shift = static_cast<std::size_t>(d.delay_samples);
  if (shift < ref.size())
    std::copy(ref.samples.begin(), ref.samples.end() - shift,
              out.samples.begin() + shift);
  return out;
}

} // namespace paec
