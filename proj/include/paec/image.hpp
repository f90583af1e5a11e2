#pragma once
// Log-magnitude spectrogram rendering to PNG (zlib-deflated, deterministic
// bytes). Color scale runs from a -80 dB floor up to a shared maximum so
// panels from one invocation are visually comparable.

#include <string>
#include <vector>

#include "paec/spectral.hpp"

namespace paec {

inline constexpr double kSpectrogramFloorDb = -80.0;

void write_png_rgb(const std::string& path, int width, int height,
                   const std::vector<unsigned char>& rgb);

// Peak magnitude (linear) of a spectrogram; 0 for all-zero input.
double spectrogram_peak(const Spectrogram& spec);

// Renders with dB range [floor_db + ref_db, ref_db]. bins on the vertical
// axis (DC at the bottom), frames horizontal.
void write_spectrogram_png(const std::string& path, const Spectrogram& spec,
                           double ref_peak);

} // namespace paec
