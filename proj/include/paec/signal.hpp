#pragma once
// Time-domain currency: 16 kHz waveforms plus the energy-ratio arithmetic
// used when mixing scenes and reporting metrics.

#include <vector>

namespace paec {

inline constexpr int kSampleRate = 16000;

struct Waveform {
  std::vector<double> samples;
  int sample_rate = kSampleRate;

  Waveform() = default;
  explicit Waveform(std::vector<double> s, int rate = kSampleRate)
      : samples(std::move(s)), sample_rate(rate) {}

  std::size_t size() const { return samples.size(); }
  bool empty() const { return samples.empty(); }
  double duration_s() const {
    return static_cast<double>(samples.size()) / sample_rate;
  }
};

double energy(const Waveform& w);
double rms(const Waveform& w);

// Gain g such that 10*log10(sum s^2 / sum (g*y)^2) == target_ser_db.
// Throws EnergyError when either signal has zero energy.
double gain_for_ser(const Waveform& s, const Waveform& y, double target_ser_db);

// Same arithmetic with noise (or interfering speech) in place of echo.
double gain_for_snr(const Waveform& s, const Waveform& v, double target_snr_db);

// 10*log10(sum s^2 / sum d^2), with the microphone signal in the
// denominator. Note this follows the printed definition, which divides by
// the full microphone energy rather than the echo energy; scene mixing uses
// gain_for_ser against the echo instead.
double compute_ser(const Waveform& s, const Waveform& d);

Waveform mix(const std::vector<const Waveform*>& parts);

} // namespace paec
