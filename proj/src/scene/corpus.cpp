#include "paec/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <numbers>
#include <random>

#include "paec/errors.hpp"
#include "paec/wavio.hpp"

namespace fs = std::filesystem;

namespace paec {

SpeakerCharacter speaker_character(std::uint64_t seed) {
  std::mt19937_64 rng(seed ^ 0x5eed5eedULL);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  SpeakerCharacter ch;
  ch.f0 = 85.0 + 165.0 * u(rng);
  ch.formants[0] = 300.0 + 500.0 * u(rng);
  ch.formants[1] = 900.0 + 1300.0 * u(rng);
  ch.formants[2] = 2200.0 + 1600.0 * u(rng);
  ch.formant_gains = {1.0, 0.4 + 0.4 * u(rng), 0.2 + 0.3 * u(rng)};
  ch.breathiness = 0.01 + 0.03 * u(rng);
  return ch;
}

namespace {

// Second-order resonator, unit-ish bandwidth around the formant.
struct Resonator {
  double a1, a2, y1 = 0.0, y2 = 0.0;
  Resonator(double freq_hz, double bw_hz) {
    const double r = std::exp(-std::numbers::pi * bw_hz / kSampleRate);
    a1 = 2.0 * r * std::cos(2.0 * std::numbers::pi * freq_hz / kSampleRate);
    a2 = -r * r;
  }
  double tick(double x) {
    const double y = x + a1 * y1 + a2 * y2;
    y2 = y1;
    y1 = y;
    return y;
  }
};

} // namespace

Waveform synth_utterance(const SpeakerCharacter& ch, std::uint64_t seed,
                         double seconds) {
  const std::size_t n = static_cast<std::size_t>(seconds * kSampleRate);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::normal_distribution<double> g(0.0, 1.0);

  // Syllable envelope: bursts of 80-250 ms separated by 30-150 ms gaps.
  std::vector<double> env(n, 0.0);
  std::size_t pos = static_cast<std::size_t>(0.02 * kSampleRate * u(rng));
  while (pos < n) {
    const std::size_t burst =
        static_cast<std::size_t>((0.08 + 0.17 * u(rng)) * kSampleRate);
    const std::size_t gap =
        static_cast<std::size_t>((0.03 + 0.12 * u(rng)) * kSampleRate);
    const std::size_t end = std::min(n, pos + burst);
    for (std::size_t i = pos; i < end; ++i) {
      const double ph = static_cast<double>(i - pos) / burst;
      env[i] = 0.5 * (1.0 - std::cos(2.0 * std::numbers::pi * ph));
    }
    pos = end + gap;
  }

  std::array<Resonator, 3> res = {Resonator(ch.formants[0], 80.0),
                                  Resonator(ch.formants[1], 120.0),
                                  Resonator(ch.formants[2], 180.0)};
  Waveform w;
  w.samples.resize(n);
  double phase = 0.0;
  const double f0_jitter = 0.04;
  double f0 = ch.f0;
  for (std::size_t i = 0; i < n; ++i) {
    if (i % 160 == 0) f0 = ch.f0 * (1.0 + f0_jitter * (u(rng) - 0.5));
    phase += 2.0 * std::numbers::pi * f0 / kSampleRate;
    if (phase > 2.0 * std::numbers::pi) phase -= 2.0 * std::numbers::pi;
    // Pulse-ish glottal excitation plus breath noise.
    const double pulse = std::pow(std::max(0.0, std::sin(phase)), 8.0);
    const double excitation = (pulse + ch.breathiness * g(rng)) * env[i];
    double s = 0.0;
    for (int f = 0; f < 3; ++f)
      s += ch.formant_gains[f] * res[f].tick(excitation);
    w.samples[i] = s;
  }
  const double r = rms(w);
  if (r > 0.0) {
    const double target = 0.05;
    for (auto& s : w.samples) s *= target / r;
  }
  return w;
}

Waveform synth_noise(std::uint64_t seed, std::size_t n_samples) {
  std::mt19937_64 rng(seed ^ 0x0153efabULL);
  std::normal_distribution<double> g(0.0, 1.0);
  std::uniform_real_distribution<double> u(0.8, 0.98);
  const double alpha = u(rng);
  Waveform w;
  w.samples.resize(n_samples);
  double state = 0.0;
  for (auto& s : w.samples) {
    state = alpha * state + (1.0 - alpha) * g(rng);
    s = state;
  }
  const double r = rms(w);
  if (r > 0.0)
    for (auto& s : w.samples) s *= 0.05 / r;
  return w;
}

Corpus::Corpus(const std::string& root) : root_(root) {
  if (!fs::is_directory(root_))
    throw CorpusError("corpus: not a directory: " + root_);
  for (const auto& entry : fs::directory_iterator(root_)) {
    if (!entry.is_directory()) continue;
    const std::string speaker = entry.path().filename().string();
    std::vector<std::string> wavs;
    for (const auto& f : fs::directory_iterator(entry.path()))
      if (f.is_regular_file() && f.path().extension() == ".wav")
        wavs.push_back(f.path().string());
    std::sort(wavs.begin(), wavs.end());
    if (!wavs.empty()) {
      speakers_.push_back(speaker);
      files_[speaker] = std::move(wavs);
    }
  }
  std::sort(speakers_.begin(), speakers_.end());
  if (speakers_.empty())
    throw CorpusError("corpus: no speaker directories with WAV files under " +
                      root_);
}

int Corpus::utterance_count(const std::string& speaker) const {
  auto it = files_.find(speaker);
  if (it == files_.end())
    throw CorpusError("corpus: unknown speaker " + speaker);
  return static_cast<int>(it->second.size());
}

const std::string& Corpus::utterance_path(const std::string& speaker,
                                          int index) const {
  auto it = files_.find(speaker);
  if (it == files_.end())
    throw CorpusError("corpus: unknown speaker " + speaker);
  if (index < 0 || index >= static_cast<int>(it->second.size()))
    throw CorpusError("corpus: utterance index out of range for " + speaker);
  return it->second[static_cast<std::size_t>(index)];
}

const Waveform& Corpus::utterance(const std::string& speaker, int index) const {
  const std::string& path = utterance_path(speaker, index);
  auto it = cache_.find(path);
  if (it == cache_.end()) it = cache_.emplace(path, read_wav(path)).first;
  return it->second;
}

void make_synthetic_corpus(const std::string& root, int n_speakers,
                           int utts_per_speaker, double seconds,
                           std::uint64_t seed) {
  fs::create_directories(root);
  char name[16];
  for (int s = 0; s < n_speakers; ++s) {
    std::snprintf(name, sizeof(name), "spk%03d", s);
    const fs::path dir = fs::path(root) / name;
    fs::create_directories(dir);
    const auto ch = speaker_character(seed * 1000003ULL + s);
    for (int uidx = 0; uidx < utts_per_speaker; ++uidx) {
      char fname[24];
      std::snprintf(fname, sizeof(fname), "utt%03d.wav", uidx);
      const auto w =
          synth_utterance(ch, seed * 7919ULL + s * 131ULL + uidx, seconds);
      write_wav((dir / fname).string(), w, WavFormat::float32);
    }
  }
}

} // namespace paec
