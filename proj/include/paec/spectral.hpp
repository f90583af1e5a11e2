#pragma once
// STFT analysis/synthesis and power compression. Framing policy: frames
// start at sample 0 with no centering, the final partial frame is dropped,
// and square-root Hann windows are used on both sides (COLA at 50% overlap).

#include <complex>
#include <vector>

#include "paec/signal.hpp"

namespace paec {

struct StftConfig {
  int frame_len = 320; // 20 ms at 16 kHz
  int hop = 160;       // 10 ms
  int fft_size = 320;

  int n_bins() const { return fft_size / 2 + 1; }
};

struct Spectrogram {
  StftConfig cfg;
  int n_frames = 0;
  // Row-major (frame, bin).
  std::vector<std::complex<double>> bins;

  int n_bins() const { return cfg.n_bins(); }
  std::complex<double>& at(int t, int k) { return bins[static_cast<std::size_t>(t) * n_bins() + k]; }
  const std::complex<double>& at(int t, int k) const {
    return bins[static_cast<std::size_t>(t) * n_bins() + k];
  }
};

struct CompressedSpectrogram {
  Spectrogram grid;
  double exponent = 0.5;
};

// Number of whole frames covered by n samples under this framing policy.
int stft_frame_count(std::size_t n_samples, const StftConfig& cfg);
// Samples covered by n_frames frames: (n_frames-1)*hop + frame_len.
std::size_t stft_covered_samples(int n_frames, const StftConfig& cfg);

std::vector<double> sqrt_hann_window(int n);

Spectrogram stft(const Waveform& wave, const StftConfig& cfg = {});
Waveform istft(const Spectrogram& spec);

CompressedSpectrogram power_compress(const Spectrogram& spec, double p = 0.5);
Spectrogram power_decompress(const CompressedSpectrogram& cspec);

} // namespace paec
