#include "paec/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "paec/errors.hpp"
#include "paec/kernels.hpp"

namespace paec {

double erle(const Waveform& d, const Waveform& s_hat) {
  const double ed = energy(d);
  if (ed <= 0.0) throw EnergyError("erle: zero-energy microphone signal");
  const double es = energy(s_hat);
  if (es <= 0.0) return kMetricCapDb;
  return std::clamp(10.0 * std::log10(ed / es), -kMetricCapDb, kMetricCapDb);
}

double si_snr(const Waveform& estimate, const Waveform& target) {
  const std::size_t n = std::min(estimate.size(), target.size());
  if (n == 0) throw EnergyError("si_snr: empty input");
  double me = 0.0, mt = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    me += estimate.samples[i];
    mt += target.samples[i];
  }
  me /= static_cast<double>(n);
  mt /= static_cast<double>(n);
  double dot = 0.0, tt = 0.0, ee = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double e = estimate.samples[i] - me;
    const double t = target.samples[i] - mt;
    dot += e * t;
    tt += t * t;
    ee += e * e;
  }
  if (tt <= 0.0) throw EnergyError("si_snr: zero-energy target");
  if (ee <= 0.0) throw EnergyError("si_snr: zero-energy estimate");
  const double a = dot / tt;
  const double sig = a * a * tt;
  const double err = ee - 2.0 * a * dot + a * a * tt;
  if (err <= sig * 1e-16) return kMetricCapDb;
  if (sig <= 0.0) return -kMetricCapDb;
  return std::clamp(10.0 * std::log10(sig / err), -kMetricCapDb, kMetricCapDb);
}

} // namespace paec
