#include <algorithm>
#include <cmath>
#include <random>

#include "paec/errors.hpp"
#include "paec/fft.hpp"
#include "paec/scene.hpp"

namespace paec {

const char* to_string(Scenario s) {
  switch (s) {
    case Scenario::DT: return "DT";
    case Scenario::FEST: return "FEST";
    case Scenario::NEST: return "NEST";
  }
  return "?";
}

const char* to_string(Distortion d) {
  switch (d) {
    case Distortion::none: return "none";
    case Distortion::clip: return "clip";
    case Distortion::attenuate: return "attenuate";
  }
  return "?";
}

Scenario scenario_from_string(const std::string& s) {
  if (s == "DT") return Scenario::DT;
  if (s == "FEST") return Scenario::FEST;
  if (s == "NEST") return Scenario::NEST;
  throw ParamError("unknown scenario: " + s);
}

Distortion distortion_from_string(const std::string& s) {
  if (s == "none") return Distortion::none;
  if (s == "clip") return Distortion::clip;
  if (s == "attenuate") return Distortion::attenuate;
  throw ParamError("unknown distortion: " + s);
}

Waveform synth_echo(const Waveform& farend, const std::vector<double>& rir,
                    double delay_s, Distortion distortion, std::uint64_t seed) {
  if (farend.empty()) throw DurationError("synth_echo: empty far-end signal");
  if (rir.empty()) throw ParamError("synth_echo: empty impulse response");
  if (delay_s < 0.0) throw ParamError("synth_echo: negative delay");

  auto conv = fft_convolve(farend.samples, rir);
  conv.resize(farend.size());

  Waveform out;
  out.sample_rate = farend.sample_rate;
  out.samples.assign(farend.size(), 0.0);
  const std::size_t shift =
      static_cast<std::size_t>(std::lround(delay_s * farend.sample_rate));
  for (std::size_t i = shift; i < out.size(); ++i)
    out.samples[i] = conv[i - shift];

  if (distortion == Distortion::clip) {
    const double limit = 4.0 * rms(out);
    if (limit > 0.0)
      for (auto& s : out.samples) s = std::clamp(s, -limit, limit);
  } else if (distortion == Distortion::attenuate) {
    std::mt19937_64 rng(seed ^ 0xa77e17a7ULL);
    std::uniform_real_distribution<double> u(0.1, 0.5);
    const double g = u(rng);
    for (auto& s : out.samples) s *= g;
  }
  return out;
}

std::vector<SceneSpec> sample_specs(int n, std::uint64_t seed,
                                    const std::vector<std::string>& speakers) {
  if (n < 1) throw ParamError("sample_specs: n must be >= 1");
  if (speakers.size() < 4)
    throw ParamError("sample_specs: need at least 4 speakers in the pool");

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<SceneSpec> specs;
  specs.reserve(n);
  char idbuf[32];
  for (int i = 0; i < n; ++i) {
    SceneSpec sp;
    std::snprintf(idbuf, sizeof(idbuf), "clip%06d", i);
    sp.id = idbuf;
    const double r = u(rng);
    sp.scenario = r < 0.8 ? Scenario::DT : (r < 0.9 ? Scenario::FEST : Scenario::NEST);
    sp.ser_db = -15.0 + 30.0 * u(rng);
    sp.snr_db = -5.0 + 30.0 * u(rng);
    sp.echo_delay_s = 0.5 * u(rng);

    if (sp.scenario == Scenario::FEST) {
      sp.n_interferers = 0;
    } else {
      const double q = u(rng);
      sp.n_interferers = q < 0.2 ? 0 : (q < 0.7 ? 1 : 2);
    }
    if (sp.scenario != Scenario::NEST) {
      const double q = u(rng);
      sp.distortion = q < 0.05 ? Distortion::clip
                               : (q < 0.10 ? Distortion::attenuate : Distortion::none);
    }

    // Distinct speaker assignment: near, far, then interferers.
    const std::size_t pool = speakers.size();
    std::vector<std::size_t> picked;
    auto pick_distinct = [&]() {
      for (;;) {
        const std::size_t c = static_cast<std::size_t>(u(rng) * pool) % pool;
        bool used = false;
        for (auto p : picked) used = used || p == c;
        if (!used) {
          picked.push_back(c);
          return c;
        }
      }
    };
    sp.near_speaker = speakers[pick_distinct()];
    sp.far_speaker = speakers[pick_distinct()];
    for (int k = 0; k < sp.n_interferers; ++k)
      sp.interferer_speakers.push_back(speakers[pick_distinct()]);

    std::uint64_t h = seed + 0x9e3779b97f4a7c15ULL * (static_cast<std::uint64_t>(i) + 1);
    h ^= h >> 30;
    h *= 0xbf58476d1ce4e5b9ULL;
    h ^= h >> 27;
    sp.seed = h;
    specs.push_back(std::move(sp));
  }
  return specs;
}

namespace {

// Tile an utterance to exactly n samples.
Waveform tiled(const Waveform& src, std::size_t n) {
  if (src.empty()) throw EnergyError("build_scene: empty source utterance");
  Waveform out;
  out.sample_rate = src.sample_rate;
  out.samples.resize(n);
  for (std::size_t i = 0; i < n; ++i) out.samples[i] = src.samples[i % src.size()];
  return out;
}

void scale_to_rms(Waveform& w, double target) {
  const double r = rms(w);
  if (r <= 0.0) throw EnergyError("build_scene: zero-energy component");
  const double g = target / r;
  for (auto& s : w.samples) s *= g;
}

} // namespace

ScenarioClip build_scene(const SceneSpec& spec, const Corpus& corpus,
                         double clip_seconds) {
  const std::size_t n = static_cast<std::size_t>(clip_seconds * kSampleRate);
  std::mt19937_64 rng(spec.seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);

  ScenarioClip clip;
  clip.spec = spec;
  clip.s.samples.assign(n, 0.0);
  clip.y.samples.assign(n, 0.0);
  clip.v.samples.assign(n, 0.0);
  clip.z.samples.assign(n, 0.0);

  auto pick_utt = [&](const std::string& speaker, int exclude) {
    const int count = corpus.utterance_count(speaker);
    if (count < 1) throw CorpusError("build_scene: no utterances for " + speaker);
    int idx = static_cast<int>(u(rng) * count) % count;
    if (exclude >= 0 && count > 1 && idx == exclude) idx = (idx + 1) % count;
    return idx;
  };

  const bool has_near = spec.scenario != Scenario::FEST;
  const bool has_echo = spec.scenario != Scenario::NEST;

  // Near-end speech stays dry; enrollment is a different recording.
  const int near_utt = pick_utt(spec.near_speaker, -1);
  if (corpus.utterance_count(spec.near_speaker) < 2)
    throw CorpusError("build_scene: speaker " + spec.near_speaker +
                      " needs a second utterance for enrollment");
  const int enroll_utt = pick_utt(spec.near_speaker, near_utt);
  clip.enrollment = corpus.utterance(spec.near_speaker, enroll_utt);
  if (has_near) {
    clip.s = tiled(corpus.utterance(spec.near_speaker, near_utt), n);
    scale_to_rms(clip.s, 0.05);
  }

  if (has_echo) {
    RoomSpec room;
    room.dims = {3.0 + 5.0 * u(rng), 3.0 + 2.0 * u(rng), 3.0 + 1.0 * u(rng)};
    room.rt60 = 0.2 + 1.0 * u(rng);
    for (int i = 0; i < 3; ++i) {
      room.source_pos[i] = 0.5 + u(rng) * (room.dims[i] - 1.0);
      room.mic_pos[i] = 0.5 + u(rng) * (room.dims[i] - 1.0);
    }
    const auto rir = generate_rir(room, spec.seed);
    clip.farend_ref = tiled(corpus.utterance(spec.far_speaker,
                                             pick_utt(spec.far_speaker, -1)), n);
    scale_to_rms(clip.farend_ref, 0.05);
    clip.y = synth_echo(clip.farend_ref, rir, spec.echo_delay_s, spec.distortion,
                        spec.seed);
    if (has_near) {
      const double g = gain_for_ser(clip.s, clip.y, spec.ser_db);
      for (auto& x : clip.y.samples) x *= g;
    } else {
      scale_to_rms(clip.y, 0.05);
    }
  } else {
    clip.farend_ref.samples.assign(n, 0.0);
  }

  clip.v = synth_noise(spec.seed ^ 0xbeefULL, n);
  {
    const Waveform& anchor = has_near ? clip.s : clip.y;
    const double g = gain_for_snr(anchor, clip.v, spec.snr_db);
    for (auto& x : clip.v.samples) x *= g;
  }

  if (spec.n_interferers > 0) {
    for (const auto& speaker : spec.interferer_speakers) {
      auto w = tiled(corpus.utterance(speaker, pick_utt(speaker, -1)), n);
      scale_to_rms(w, 0.05);
      for (std::size_t i = 0; i < n; ++i) clip.z.samples[i] += w.samples[i];
    }
    // Total interferer power follows the same SNR draw as the noise.
    const double g = gain_for_snr(clip.s, clip.z, spec.snr_db);
    for (auto& x : clip.z.samples) x *= g;
  }

  clip.d.samples.resize(n);
  for (std::size_t i = 0; i < n; ++i)
    clip.d.samples[i] =
        clip.s.samples[i] + clip.y.samples[i] + clip.v.samples[i] + clip.z.samples[i];

  // One common gain keeps ratios intact if the mix would clip.
  double peak = 0.0;
  for (double x : clip.d.samples) peak = std::max(peak, std::abs(x));
  if (peak > 0.99) {
    const double g = 0.99 / peak;
    for (Waveform* w : {&clip.d, &clip.s, &clip.y, &clip.v, &clip.z, &clip.farend_ref})
      for (auto& x : w->samples) x *= g;
  }

  clip.realized_ser_db = has_near && has_echo
                             ? 10.0 * std::log10(energy(clip.s) / energy(clip.y))
                             : std::nan("");
  clip.realized_snr_db =
      10.0 * std::log10(energy(has_near ? clip.s : clip.y) / energy(clip.v));
  return clip;
}

} // namespace paec
