#pragma once
// Image-source room impulse response generator behind a small provider
// surface so externally generated RIRs can be swapped in. Uniform wall
// reflectivity from the Eyring absorption estimate; images land on the
// nearest-floor sample index (no fractional-delay interpolation).

#include <array>
#include <cstdint>
#include <vector>

namespace paec {

struct RoomSpec {
  std::array<double, 3> dims{5.0, 4.0, 3.0};       // meters
  double rt60 = 0.5;                               // seconds
  std::array<double, 3> source_pos{1.0, 1.0, 1.5}; // loudspeaker
  std::array<double, 3> mic_pos{3.0, 2.0, 1.5};
};

// Deterministic for (room, seed); the seed is reserved for stochastic
// providers and is not consumed by the image-source model.
std::vector<double> generate_rir(const RoomSpec& room, std::uint64_t seed,
                                 int sample_rate = 16000);

// Backward-integrated (Schroeder) decay time from -5 dB to -35 dB,
// extrapolated to 60 dB. The test oracle for rt60 accuracy.
double schroeder_t60(const std::vector<double>& rir, int sample_rate = 16000);

} // namespace paec
