#pragma once
// Subband cross-correlation time-delay estimation. Per-band magnitude
// envelopes are correlated over frame lags covering 0-0.5 s; the per-band
// normalized correlations are summed and the peak lag is converted back to
// samples. Delay is estimated once per utterance (offline mode).

#include "paec/signal.hpp"

namespace paec {

struct DelayEstimate {
  int delay_samples = 0;
  double confidence = 0.0; // normalized peak height in [0, 1]
};

struct TdeConfig {
  double search_ms = 500.0;
  int bands = 8;
  double ref_energy_floor = 1e-10; // below this the reference counts as silent
};

DelayEstimate estimate_delay(const Waveform& mic, const Waveform& ref,
                             const TdeConfig& cfg = {});

// Shift the reference forward by delay_samples, zero-padding the head;
// output length equals input length.
Waveform align_reference(const Waveform& ref, const DelayEstimate& d);

} // namespace paec
