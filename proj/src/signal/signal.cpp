#include "paec/signal.hpp"

#include <cmath>

#include "paec/errors.hpp"
#include "paec/kernels.hpp"

namespace paec {

double energy(const Waveform& w) {
  return kernels::sumsq(w.samples.data(), w.samples.size());
}

double rms(const Waveform& w) {
  if (w.empty()) return 0.0;
  return std::sqrt(energy(w) / static_cast<double>(w.size()));
}

double gain_for_ser(const Waveform& s, const Waveform& y, double target_ser_db) {
  const double es = energy(s);
  const double ey = energy(y);
  if (es <= 0.0) throw EnergyError("gain_for_ser: zero-energy near-end signal");
  if (ey <= 0.0) throw EnergyError("gain_for_ser: zero-energy echo signal");
  // 10*log10(es / (g^2 * ey)) == target  =>  g = sqrt(es / (ey * 10^(target/10)))
  return std::sqrt(es / (ey * std::pow(10.0, target_ser_db / 10.0)));
}

double gain_for_snr(const Waveform& s, const Waveform& v, double target_snr_db) {
  const double es = energy(s);
  const double ev = energy(v);
  if (es <= 0.0) throw EnergyError("gain_for_snr: zero-energy signal");
  if (ev <= 0.0) throw EnergyError("gain_for_snr: zero-energy noise");
  return std::sqrt(es / (ev * std::pow(10.0, target_snr_db / 10.0)));
}

double compute_ser(const Waveform& s, const Waveform& d) {
  const double ed = energy(d);
  if (ed <= 0.0) throw EnergyError("compute_ser: zero-energy microphone signal");
  return 10.0 * std::log10(energy(s) / ed);
}

Waveform mix(const std::vector<const Waveform*>& parts) {
  std::size_t n = 0;
  for (const auto* p : parts)
    if (p->size() > n) n = p->size();
  Waveform out(std::vector<double>(n, 0.0));
  for (const auto* p : parts)
    kernels::vadd(out.samples.data(), p->samples.data(),
                  out.samples.data(), p->size());
  return out;
}

} // namespace paec
