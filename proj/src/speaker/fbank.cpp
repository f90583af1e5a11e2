#include <cmath>

#include "paec/errors.hpp"
#include "paec/speaker.hpp"
#include "paec/spectral.hpp"

namespace paec {
namespace {

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

// Triangular mel filters over the 161 linear bins, 0-8 kHz.
std::vector<std::vector<double>> mel_filterbank(int n_mels, int n_bins) {
  const double mel_lo = hz_to_mel(0.0);
  const double mel_hi = hz_to_mel(8000.0);
  std::vector<double> centers(n_mels + 2);
  for (int m = 0; m < n_mels + 2; ++m) {
    const double mel = mel_lo + (mel_hi - mel_lo) * m / (n_mels + 1);
    centers[m] = mel_to_hz(mel) / 8000.0 * (n_bins - 1);
  }
  std::vector<std::vector<double>> fb(n_mels, std::vector<double>(n_bins, 0.0));
  for (int m = 0; m < n_mels; ++m) {
    const double lo = centers[m], mid = centers[m + 1], hi = centers[m + 2];
    for (int k = 0; k < n_bins; ++k) {
      if (k > lo && k < mid)
        fb[m][k] = (k - lo) / (mid - lo);
      else if (k >= mid && k < hi)
        fb[m][k] = (hi - k) / (hi - mid);
    }
  }
  return fb;
}

} // namespace

FBankStats compute_fbank_stats(const Waveform& enrollment) {
  if (enrollment.size() < static_cast<std::size_t>(kSampleRate))
    throw DurationError("compute_fbank_stats: enrollment must be >= 1 s");
  const auto spec = stft(enrollment);
  const int n_mels = 80;
  static const auto fb = mel_filterbank(n_mels, 161);

  // log-mel energies per frame; two-pass statistics avoid cancellation.
  std::vector<double> e(static_cast<std::size_t>(spec.n_frames) * n_mels);
  for (int t = 0; t < spec.n_frames; ++t) {
    for (int m = 0; m < n_mels; ++m) {
      double acc = 0.0;
      for (int k = 0; k < 161; ++k) {
        const double w = fb[m][k];
        if (w > 0.0) acc += w * std::norm(spec.at(t, k));
      }
      e[static_cast<std::size_t>(t) * n_mels + m] = std::log(std::max(acc, 1e-12));
    }
  }
  FBankStats out;
  out.v.resize(160);
  const double inv = 1.0 / spec.n_frames;
  for (int m = 0; m < n_mels; ++m) {
    double mu = 0.0;
    for (int t = 0; t < spec.n_frames; ++t)
      mu += e[static_cast<std::size_t>(t) * n_mels + m];
    mu *= inv;
    double var = 0.0;
    for (int t = 0; t < spec.n_frames; ++t) {
      const double d = e[static_cast<std::size_t>(t) * n_mels + m] - mu;
      var += d * d;
    }
    out.v[m] = mu;
    out.v[80 + m] = std::sqrt(var * inv);
  }
  return out;
}

} // namespace paec
