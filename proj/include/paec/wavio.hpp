#pragma once
// WAV ingestion and emission. Readable: mono 16-bit PCM and 32-bit IEEE
// float; other sample rates are resampled to 16 kHz on load; stereo files
// are rejected. Dataset audio is written as 32-bit float so that component
// additivity survives a round trip through disk.

#include <string>

#include "paec/signal.hpp"

namespace paec {

enum class WavFormat { pcm16, float32 };

Waveform read_wav(const std::string& path);
// As above, also reporting the file's rate before any resampling.
Waveform read_wav(const std::string& path, int* original_rate);
void write_wav(const std::string& path, const Waveform& w,
               WavFormat fmt = WavFormat::float32);

// Polyphase rational resampler (quality not contractual).
Waveform resample(const Waveform& in, int out_rate);

} // namespace paec
