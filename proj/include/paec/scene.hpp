#pragma once
// Scene synthesis: scenario sampling and clip construction following the
// d = s + y + v + z signal model. Every clip is a pure function of
// (spec, corpus), so regeneration is bit-identical.

#include <cstdint>
#include <string>
#include <vector>

#include "paec/corpus.hpp"
#include "paec/rir.hpp"
#include "paec/signal.hpp"

namespace paec {

enum class Scenario { DT, FEST, NEST };
enum class Distortion { none, clip, attenuate };

const char* to_string(Scenario s);
const char* to_string(Distortion d);
Scenario scenario_from_string(const std::string& s);
Distortion distortion_from_string(const std::string& s);

struct SceneSpec {
  std::string id;
  Scenario scenario = Scenario::DT;
  double ser_db = 0.0; // used for DT mixing; carried but unused for FEST
  double snr_db = 10.0;
  int n_interferers = 0;
  double echo_delay_s = 0.0;
  Distortion distortion = Distortion::none;
  std::string near_speaker;
  std::string far_speaker;
  std::vector<std::string> interferer_speakers;
  std::uint64_t seed = 0;
};

struct ScenarioClip {
  Waveform d, s, y, v, z;
  Waveform enrollment; // disjoint utterance of the near-end speaker
  Waveform farend_ref; // loudspeaker signal feeding the echo path
  SceneSpec spec;
  double realized_ser_db = 0.0; // NaN when the scenario has no near-end speech
  double realized_snr_db = 0.0;
};

// Convolve with the RIR, apply the integer-sample delay, then the optional
// distortion (clip at 4x RMS, or attenuate by a seeded gain in [0.1, 0.5]).
Waveform synth_echo(const Waveform& farend, const std::vector<double>& rir,
                    double delay_s, Distortion distortion,
                    std::uint64_t seed = 0);

// Scenario ratio 8:1:1 (DT:FEST:NEST); interferer counts 20/50/30% within
// DT and NEST; 10% of echo-bearing clips get clip or attenuate distortion.
std::vector<SceneSpec> sample_specs(int n, std::uint64_t seed,
                                    const std::vector<std::string>& speakers);

ScenarioClip build_scene(const SceneSpec& spec, const Corpus& corpus,
                         double clip_seconds = 10.0);

} // namespace paec
