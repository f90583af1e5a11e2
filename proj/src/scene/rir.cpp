#include "paec/rir.hpp"

#include <cmath>
#include <numbers>

#include "paec/errors.hpp"

namespace paec {
namespace {

constexpr double kSpeedOfSound = 343.0;

void validate(const RoomSpec& room) {
  for (int i = 0; i < 3; ++i) {
    if (room.dims[i] <= 0.0)
      throw GeometryError("generate_rir: non-positive room dimension");
    if (room.source_pos[i] <= 0.0 || room.source_pos[i] >= room.dims[i])
      throw GeometryError("generate_rir: source outside the room");
    if (room.mic_pos[i] <= 0.0 || room.mic_pos[i] >= room.dims[i])
      throw GeometryError("generate_rir: microphone outside the room");
  }
  if (room.rt60 <= 0.0) throw GeometryError("generate_rir: rt60 must be positive");
}

} // namespace

std::vector<double> generate_rir(const RoomSpec& room, std::uint64_t /*seed*/,
                                 int fs) {
  validate(room);
  const auto& L = room.dims;
  const double V = L[0] * L[1] * L[2];
  const double S = 2.0 * (L[0] * L[1] + L[0] * L[2] + L[1] * L[2]);
  // Eyring absorption for the requested decay time; uniform on all walls.
  double alpha = 1.0 - std::exp(-24.0 * std::numbers::ln10 * V /
                                (kSpeedOfSound * S * room.rt60));
  if (alpha > 0.9999) alpha = 0.9999;
  const double beta = std::sqrt(1.0 - alpha);

  double direct = 0.0;
  for (int i = 0; i < 3; ++i) {
    const double d = room.source_pos[i] - room.mic_pos[i];
    direct += d * d;
  }
  direct = std::sqrt(direct);

  const double max_dist = kSpeedOfSound * room.rt60 + direct;
  const std::size_t len =
      static_cast<std::size_t>(std::ceil(max_dist / kSpeedOfSound * fs)) + 64;
  std::vector<double> rir(len, 0.0);

  int order[3];
  for (int i = 0; i < 3; ++i)
    order[i] = static_cast<int>(std::ceil(max_dist / (2.0 * L[i])));

  for (int nx = -order[0]; nx <= order[0]; ++nx)
    for (int px = 0; px <= 1; ++px)
      for (int ny = -order[1]; ny <= order[1]; ++ny)
        for (int py = 0; py <= 1; ++py)
          for (int nz = -order[2]; nz <= order[2]; ++nz)
            for (int pz = 0; pz <= 1; ++pz) {
              const double ix = (1 - 2 * px) * room.source_pos[0] + 2.0 * nx * L[0];
              const double iy = (1 - 2 * py) * room.source_pos[1] + 2.0 * ny * L[1];
              const double iz = (1 - 2 * pz) * room.source_pos[2] + 2.0 * nz * L[2];
              const double dx = ix - room.mic_pos[0];
              const double dy = iy - room.mic_pos[1];
              const double dz = iz - room.mic_pos[2];
              const double dist = std::sqrt(dx * dx + dy * dy + dz * dz);
              if (dist > max_dist) continue;
              const int refl = std::abs(nx - px) + std::abs(nx) +
                               std::abs(ny - py) + std::abs(ny) +
                               std::abs(nz - pz) + std::abs(nz);
              const double amp = std::pow(beta, refl) /
                                 (4.0 * std::numbers::pi * std::max(dist, 0.1));
              const std::size_t idx =
                  static_cast<std::size_t>(dist / kSpeedOfSound * fs);
              if (idx < rir.size()) rir[idx] += amp;
            }
  return rir;
}

double schroeder_t60(const std::vector<double>& rir, int fs) {
  if (rir.empty()) throw ParamError("schroeder_t60: empty impulse response");
  // Backward energy integral.
  std::vector<double> edc(rir.size());
  double acc = 0.0;
  for (std::size_t i = rir.size(); i-- > 0;) {
    acc += rir[i] * rir[i];
    edc[i] = acc;
  }
  if (acc <= 0.0) throw ParamError("schroeder_t60: zero-energy impulse response");
  const double total = acc;
  auto time_at_db = [&](double db) {
    const double threshold = total * std::pow(10.0, db / 10.0);
    for (std::size_t i = 0; i < edc.size(); ++i)
      if (edc[i] <= threshold) return static_cast<double>(i) / fs;
    return static_cast<double>(edc.size()) / fs;
  };
  const double t5 = time_at_db(-5.0);
  const double t35 = time_at_db(-35.0);
  return (t35 - t5) * 2.0; // -5..-35 dB slope extrapolated to 60 dB
}

} // namespace paec
