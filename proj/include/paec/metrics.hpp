#pragma once
// Waveform metrics. Both are capped at +-80 dB so degenerate cases stay
// finite in reports.

#include "paec/signal.hpp"

namespace paec {

inline constexpr double kMetricCapDb = 80.0;

// Echo return loss enhancement, 10*log10(sum d^2 / sum s_hat^2); meaningful
// on far-end single-talk clips. Zero-energy output hits the +80 dB cap.
double erle(const Waveform& d, const Waveform& s_hat);

// Scale-invariant SNR: zero-mean, project the estimate onto the target,
// ratio of projection to residual energy.
double si_snr(const Waveform& estimate, const Waveform& target);

} // namespace paec
