#pragma once
// Speech corpus access. Layout: one subdirectory per speaker, WAV files
// inside. Also hosts the synthetic-speaker generator used for desk-scale
// corpora and fixtures: each synthetic speaker has a fixed formant layout
// and pitch, so enrollment statistics cluster by speaker.

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "paec/signal.hpp"

namespace paec {

struct SpeakerCharacter {
  double f0 = 120.0;                      // fundamental, Hz
  std::array<double, 3> formants{500.0, 1500.0, 2500.0};
  std::array<double, 3> formant_gains{1.0, 0.6, 0.35};
  double breathiness = 0.02;
};

// Deterministic character for a seed (speaker identity).
SpeakerCharacter speaker_character(std::uint64_t seed);

// Speech-like utterance: syllable-modulated harmonic excitation through the
// speaker's formant resonators plus a little breath noise. RMS ~= 0.05.
Waveform synth_utterance(const SpeakerCharacter& ch, std::uint64_t seed,
                         double seconds);

// Shaped background noise (one-pole lowpassed white noise).
Waveform synth_noise(std::uint64_t seed, std::size_t n_samples);

class Corpus {
 public:
  // Scans root/<speaker>/<utterance>.wav. Throws CorpusError when the root
  // is missing or holds no speakers.
  explicit Corpus(const std::string& root);

  const std::vector<std::string>& speakers() const { return speakers_; }
  int utterance_count(const std::string& speaker) const;
  // Loads (and caches) an utterance, resampled to 16 kHz.
  const Waveform& utterance(const std::string& speaker, int index) const;
  const std::string& utterance_path(const std::string& speaker, int index) const;

 private:
  std::string root_;
  std::vector<std::string> speakers_;
  std::map<std::string, std::vector<std::string>> files_;
  mutable std::map<std::string, Waveform> cache_;
};

// Writes a synthetic corpus: n_speakers directories ("spk000", ...) each
// with utts_per_speaker WAVs of the given length.
void make_synthetic_corpus(const std::string& root, int n_speakers,
                           int utts_per_speaker, double seconds,
                           std::uint64_t seed);

} // namespace paec
