#include "paec/spectral.hpp"

#include <cmath>
#include <numbers>

#include "paec/errors.hpp"
#include "paec/fft.hpp"

namespace paec {
namespace {

void check_cfg(const StftConfig& cfg) {
  if (cfg.frame_len <= 0 || cfg.hop <= 0 || cfg.fft_size <= 0)
    throw ParamError("stft: non-positive framing parameter");
  if (cfg.frame_len > cfg.fft_size)
    throw ParamError("stft: frame_len exceeds fft_size");
  if (cfg.frame_len % cfg.hop != 0)
    throw ParamError("stft: hop must divide frame_len");
  if (!fft_size_supported(cfg.fft_size))
    throw ParamError("stft: unsupported fft_size");
}

} // namespace

int stft_frame_count(std::size_t n_samples, const StftConfig& cfg) {
  if (n_samples < static_cast<std::size_t>(cfg.frame_len)) return 0;
  return 1 + static_cast<int>((n_samples - cfg.frame_len) / cfg.hop);
}

std::size_t stft_covered_samples(int n_frames, const StftConfig& cfg) {
  if (n_frames <= 0) return 0;
  return static_cast<std::size_t>(n_frames - 1) * cfg.hop + cfg.frame_len;
}

std::vector<double> sqrt_hann_window(int n) {
  // Periodic Hann; the square-root pair satisfies COLA at 50% overlap.
  std::vector<double> w(n);
  for (int i = 0; i < n; ++i) {
    const double hann = 0.5 * (1.0 - std::cos(2.0 * std::numbers::pi * i / n));
    w[i] = std::sqrt(hann);
  }
  return w;
}

Spectrogram stft(const Waveform& wave, const StftConfig& cfg) {
  check_cfg(cfg);
  if (wave.empty()) throw DurationError("stft: empty waveform");
  if (wave.sample_rate != kSampleRate)
    throw RateError("stft: expected 16 kHz input, got " +
                    std::to_string(wave.sample_rate) + " Hz");
  const int n_frames = stft_frame_count(wave.size(), cfg);
  if (n_frames == 0)
    throw DurationError("stft: input shorter than one frame");

  Spectrogram spec;
  spec.cfg = cfg;
  spec.n_frames = n_frames;
  const int n_bins = cfg.n_bins();
  spec.bins.assign(static_cast<std::size_t>(n_frames) * n_bins, {});

  const auto win = sqrt_hann_window(cfg.frame_len);
  std::vector<cd> buf(cfg.fft_size);
  for (int t = 0; t < n_frames; ++t) {
    const double* x = wave.samples.data() + static_cast<std::size_t>(t) * cfg.hop;
    for (int i = 0; i < cfg.frame_len; ++i) buf[i] = x[i] * win[i];
    for (int i = cfg.frame_len; i < cfg.fft_size; ++i) buf[i] = 0.0;
    fft(buf);
    for (int k = 0; k < n_bins; ++k) spec.at(t, k) = buf[k];
  }
  return spec;
}

Waveform istft(const Spectrogram& spec) {
  check_cfg(spec.cfg);
  const int n_bins = spec.cfg.n_bins();
  if (spec.n_frames < 0 ||
      spec.bins.size() != static_cast<std::size_t>(spec.n_frames) * n_bins)
    throw ParamError("istft: inconsistent spectrogram dimensions");
  const StftConfig& cfg = spec.cfg;
  const std::size_t out_len = stft_covered_samples(spec.n_frames, cfg);
  Waveform out(std::vector<double>(out_len, 0.0));
  if (spec.n_frames == 0) return out;

  std::vector<double> norm(out_len, 0.0);
  const auto win = sqrt_hann_window(cfg.frame_len);
  std::vector<cd> buf(cfg.fft_size);
  for (int t = 0; t < spec.n_frames; ++t) {
    for (int k = 0; k < n_bins; ++k) buf[k] = spec.at(t, k);
    for (int k = n_bins; k < cfg.fft_size; ++k)
      buf[k] = std::conj(spec.at(t, cfg.fft_size - k));
    fft(buf, /*inverse=*/true);
    double* y = out.samples.data() + static_cast<std::size_t>(t) * cfg.hop;
    double* nw = norm.data() + static_cast<std::size_t>(t) * cfg.hop;
    for (int i = 0; i < cfg.frame_len; ++i) {
      y[i] += buf[i].real() * win[i];
      nw[i] += win[i] * win[i];
    }
  }
  for (std::size_t i = 0; i < out_len; ++i)
    out.samples[i] = norm[i] > 1e-8 ? out.samples[i] / norm[i] : 0.0;
  return out;
}

CompressedSpectrogram power_compress(const Spectrogram& spec, double p) {
  if (!(p > 0.0 && p <= 1.0))
    throw ParamError("power_compress: exponent must lie in (0, 1]");
  CompressedSpectrogram out;
  out.exponent = p;
  out.grid = spec;
  for (auto& v : out.grid.bins) {
    const double mag = std::abs(v);
    if (mag > 0.0) v *= std::pow(mag, p - 1.0); // |v|^p with phase kept
  }
  return out;
}

Spectrogram power_decompress(const CompressedSpectrogram& cspec) {
  const double p = cspec.exponent;
  if (!(p > 0.0 && p <= 1.0))
    throw ParamError("power_decompress: exponent must lie in (0, 1]");
  Spectrogram out = cspec.grid;
  const double inv = 1.0 / p;
  for (auto& v : out.bins) {
    const double mag = std::abs(v);
    if (mag > 0.0) v *= std::pow(mag, inv - 1.0);
  }
  return out;
}

} // namespace paec
