#pragma once
// STFT-domain NLMS linear echo canceller: multi-frame complex taps per
// frequency bin estimate the linear echo from the aligned reference; the
// error signal is the microphone minus that estimate. One NlmsState serves
// exactly one stream; distinct streams need distinct states.

#include <complex>
#include <vector>

#include "paec/signal.hpp"
#include "paec/spectral.hpp"

namespace paec {

struct NlmsConfig {
  int taps_per_bin = 10; // ~50 ms of echo tail after alignment
  double mu = 0.5;
  double epsilon = 1e-6;
  // Internal filterbank. 4x oversampling (hop 80 under the 320 window)
  // keeps cross-band aliasing low enough for >= 20 dB steady-state ERLE;
  // the post-filter's 20 ms / 10 ms analysis is unaffected.
  StftConfig stft{320, 80, 320};
};

struct NlmsOutput {
  Waveform y_lin; // linear echo estimate
  Waveform e;     // error signal (mic minus estimate)
};

class NlmsState {
 public:
  explicit NlmsState(const NlmsConfig& cfg, int n_bins);

  // Consumes one frame of mic and reference spectra; fills the echo-estimate
  // and error frames (each n_bins long).
  void process_frame(const std::complex<double>* mic,
                     const std::complex<double>* ref,
                     std::complex<double>* y_hat, std::complex<double>* err);

  const NlmsConfig& config() const { return cfg_; }

 private:
  NlmsConfig cfg_;
  int n_bins_;
  int frames_seen_ = 0;
  std::vector<std::complex<double>> taps_;    // (bin, tap)
  std::vector<std::complex<double>> history_; // (bin, tap) ring of ref frames
};

// Runs TDE-aligned reference and microphone through the adaptive filter and
// synthesizes both outputs back to the time domain. Outputs have the same
// length as the input; samples past the last whole frame carry e = mic,
// y_lin = 0. Throws ShapeError on length mismatch.
NlmsOutput nlms_run(const Waveform& mic, const Waveform& aligned_ref,
                    const NlmsConfig& cfg = {});

} // namespace paec
