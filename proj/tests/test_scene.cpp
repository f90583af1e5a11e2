#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>

#include "paec/errors.hpp"
#include "paec/manifest.hpp"
#include "paec/rir.hpp"
#include "paec/scene.hpp"
#include "paec/signal.hpp"

using namespace paec;
namespace fs = std::filesystem;

namespace {

struct CorpusFixture {
  fs::path dir;
  CorpusFixture() {
    dir = fs::temp_directory_path() / "paec_scene_corpus";
    if (!fs::exists(dir / "spk005"))
      make_synthetic_corpus(dir.string(), 6, 3, 4.0, 77);
  }
  Corpus open() const { return Corpus(dir.string()); }
};

} // namespace

TEST_CASE("rir: near-anechoic room concentrates energy at the direct path") {
  RoomSpec room;
  room.dims = {6.0, 4.0, 3.0};
  room.rt60 = 0.02; // absorption saturates toward 1
  room.source_pos = {1.0, 2.0, 1.5};
  room.mic_pos = {4.0, 2.0, 1.5};
  auto rir = generate_rir(room, 1);
  const double dist = 3.0;
  const std::size_t expect = static_cast<std::size_t>(dist / 343.0 * 16000.0);
  double total = 0.0;
  for (double h : rir) total += h * h;
  CHECK(rir[expect] * rir[expect] / total >= 0.95);
}

TEST_CASE("rir: Schroeder decay tracks the requested rt60 within 20%") {
  RoomSpec room;
  room.dims = {6.0, 4.5, 3.2};
  room.rt60 = 0.6;
  room.source_pos = {1.2, 1.1, 1.4};
  room.mic_pos = {4.4, 3.2, 1.7};
  auto rir = generate_rir(room, 2);
  const double t60 = schroeder_t60(rir);
  CHECK(t60 == doctest::Approx(0.6).epsilon(0.20));
}

TEST_CASE("rir: deterministic and geometry-checked") {
  RoomSpec room;
  auto a = generate_rir(room, 5);
  auto b = generate_rir(room, 5);
  CHECK(a == b);

  RoomSpec bad = room;
  bad.mic_pos = {99.0, 1.0, 1.0};
  CHECK_THROWS_AS(generate_rir(bad, 1), GeometryError);
  RoomSpec bad2 = room;
  bad2.rt60 = -1.0;
  CHECK_THROWS_AS(generate_rir(bad2, 1), GeometryError);
}

TEST_CASE("synth_echo: identity impulse response passes the signal through") {
  auto far = synth_utterance(speaker_character(3), 4, 1.0);
  std::vector<double> unit{1.0};
  auto out = synth_echo(far, unit, 0.0, Distortion::none);
  REQUIRE(out.size() == far.size());
  double m = 0.0;
  for (std::size_t i = 0; i < far.size(); ++i)
    m = std::max(m, std::abs(out.samples[i] - far.samples[i]));
  CHECK(m < 1e-9);
}

TEST_CASE("synth_echo: 0.5 s delay zeroes the first 8000 samples") {
  auto far = synth_utterance(speaker_character(5), 6, 2.0);
  std::vector<double> unit{1.0};
  auto out = synth_echo(far, unit, 0.5, Distortion::none);
  for (int i = 0; i < 8000; ++i) CHECK(out.samples[i] == 0.0);
  double m = 0.0;
  for (std::size_t i = 8000; i < out.size(); ++i)
    m = std::max(m, std::abs(out.samples[i] - far.samples[i - 8000]));
  CHECK(m < 1e-9);
}

TEST_CASE("synth_echo: clip distortion saturates at 4x RMS") {
  Waveform sine;
  sine.samples.resize(16000);
  for (std::size_t i = 0; i < sine.samples.size(); ++i)
    sine.samples[i] = std::sin(2.0 * 3.14159265358979 * 440.0 * i / 16000.0);
  std::vector<double> unit{1.0};
  auto out = synth_echo(sine, unit, 0.0, Distortion::clip);
  const double bound = 4.0 * 0.7071 + 1e-3;
  bool flattened = false;
  for (std::size_t i = 1; i + 1 < out.size(); ++i) {
    CHECK(std::abs(out.samples[i]) <= bound);
    flattened = flattened || (out.samples[i] == out.samples[i + 1] &&
                              std::abs(out.samples[i]) > 1.0);
  }
  // A sine's crest factor is sqrt(2) < 4, so saturation needs spikier input.
  Waveform spiky;
  spiky.samples.assign(16000, 0.0);
  for (std::size_t i = 0; i < spiky.samples.size(); ++i) {
    spiky.samples[i] = 0.1 * std::sin(0.07 * i);
    if (i % 500 == 250) spiky.samples[i] = 10.0;
  }
  out = synth_echo(spiky, unit, 0.0, Distortion::clip);
  const double limit = 4.0 * rms(spiky);
  REQUIRE(limit < 10.0);
  int at_limit = 0;
  double peak = 0.0;
  for (double s : out.samples) {
    if (std::abs(s) >= limit * (1.0 - 1e-6)) ++at_limit;
    peak = std::max(peak, std::abs(s));
  }
  CHECK(at_limit >= 16000 / 500);  // every spike flattened
  CHECK(peak <= limit * (1.0 + 1e-6));
}

TEST_CASE("synth_echo: attenuation gain lands in [0.1, 0.5] deterministically") {
  auto far = synth_utterance(speaker_character(7), 8, 1.0);
  std::vector<double> unit{1.0};
  auto a = synth_echo(far, unit, 0.0, Distortion::attenuate, 123);
  auto b = synth_echo(far, unit, 0.0, Distortion::attenuate, 123);
  CHECK(a.samples == b.samples);
  const double g = rms(a) / rms(far);
  CHECK(g >= 0.1);
  CHECK(g <= 0.5);
}

TEST_CASE("sample_specs: ratios, ranges, determinism") {
  std::vector<std::string> pool{"a", "b", "c", "d", "e", "f", "g", "h"};
  auto specs = sample_specs(10000, 42, pool);
  REQUIRE(specs.size() == 10000);

  int dt = 0, fest = 0, nest = 0;
  std::map<int, int> interferers;
  for (const auto& sp : specs) {
    switch (sp.scenario) {
      case Scenario::DT: ++dt; break;
      case Scenario::FEST: ++fest; break;
      case Scenario::NEST: ++nest; break;
    }
    if (sp.scenario != Scenario::FEST) ++interferers[sp.n_interferers];
    CHECK(sp.ser_db >= -15.0);
    CHECK(sp.ser_db <= 15.0);
    CHECK(sp.snr_db >= -5.0);
    CHECK(sp.snr_db <= 25.0);
    CHECK(sp.echo_delay_s >= 0.0);
    CHECK(sp.echo_delay_s <= 0.5);
    CHECK(sp.near_speaker != sp.far_speaker);
    for (const auto& i : sp.interferer_speakers) {
      CHECK(i != sp.near_speaker);
      CHECK(i != sp.far_speaker);
    }
    if (sp.scenario == Scenario::FEST) CHECK(sp.n_interferers == 0);
  }
  const double n = specs.size();
  CHECK(dt / n == doctest::Approx(0.8).epsilon(0.04));
  CHECK(fest / n == doctest::Approx(0.1).epsilon(0.2));
  CHECK(nest / n == doctest::Approx(0.1).epsilon(0.2));
  const double ni = interferers[0] + interferers[1] + interferers[2];
  CHECK(interferers[0] / ni == doctest::Approx(0.2).epsilon(0.1));
  CHECK(interferers[1] / ni == doctest::Approx(0.5).epsilon(0.1));
  CHECK(interferers[2] / ni == doctest::Approx(0.3).epsilon(0.1));

  auto again = sample_specs(10000, 42, pool);
  for (std::size_t i = 0; i < specs.size(); ++i) {
    CHECK(again[i].seed == specs[i].seed);
    CHECK(again[i].scenario == specs[i].scenario);
    CHECK(again[i].ser_db == specs[i].ser_db);
  }

  auto one = sample_specs(1, 7, pool);
  REQUIRE(one.size() == 1);
}

TEST_CASE("build_scene: FEST has no near-end or interferer components") {
  CorpusFixture fx;
  auto corpus = fx.open();
  SceneSpec sp;
  sp.id = "t0";
  sp.scenario = Scenario::FEST;
  sp.snr_db = 20.0;
  sp.near_speaker = corpus.speakers()[0];
  sp.far_speaker = corpus.speakers()[1];
  sp.seed = 11;
  auto clip = build_scene(sp, corpus, 4.0);
  for (double x : clip.s.samples) CHECK(x == 0.0);
  for (double x : clip.z.samples) CHECK(x == 0.0);
  double m = 0.0;
  for (std::size_t i = 0; i < clip.d.size(); ++i)
    m = std::max(m, std::abs(clip.d.samples[i] - clip.y.samples[i] - clip.v.samples[i]));
  CHECK(m < 1e-12);
  CHECK(std::isnan(clip.realized_ser_db));
  // FEST SNR is defined against the echo.
  CHECK(clip.realized_snr_db == doctest::Approx(20.0).epsilon(0.001));
}

TEST_CASE("build_scene: DT hits the target SER within 0.1 dB and is additive") {
  CorpusFixture fx;
  auto corpus = fx.open();
  SceneSpec sp;
  sp.id = "t1";
  sp.scenario = Scenario::DT;
  sp.ser_db = 0.0;
  sp.snr_db = 15.0;
  sp.n_interferers = 1;
  sp.near_speaker = corpus.speakers()[0];
  sp.far_speaker = corpus.speakers()[1];
  sp.interferer_speakers = {corpus.speakers()[2]};
  sp.echo_delay_s = 0.1;
  sp.seed = 13;
  auto clip = build_scene(sp, corpus, 4.0);
  CHECK(std::abs(clip.realized_ser_db - 0.0) <= 0.1);
  CHECK(std::abs(clip.realized_snr_db - 15.0) <= 0.1);
  double m = 0.0;
  for (std::size_t i = 0; i < clip.d.size(); ++i)
    m = std::max(m, std::abs(clip.d.samples[i] - clip.s.samples[i] -
                             clip.y.samples[i] - clip.v.samples[i] -
                             clip.z.samples[i]));
  CHECK(m < 1e-6);
  CHECK(energy(clip.z) > 0.0);
  CHECK(energy(clip.enrollment) > 0.0);
}

TEST_CASE("build_scene: NEST with no interferers is s + v") {
  CorpusFixture fx;
  auto corpus = fx.open();
  SceneSpec sp;
  sp.id = "t2";
  sp.scenario = Scenario::NEST;
  sp.snr_db = 5.0;
  sp.near_speaker = corpus.speakers()[3];
  sp.far_speaker = corpus.speakers()[4];
  sp.seed = 17;
  auto clip = build_scene(sp, corpus, 4.0);
  for (double x : clip.y.samples) CHECK(x == 0.0);
  for (double x : clip.z.samples) CHECK(x == 0.0);
  double m = 0.0;
  for (std::size_t i = 0; i < clip.d.size(); ++i)
    m = std::max(m, std::abs(clip.d.samples[i] - clip.s.samples[i] - clip.v.samples[i]));
  CHECK(m < 1e-12);
}

TEST_CASE("build_scene is deterministic") {
  CorpusFixture fx;
  auto corpus = fx.open();
  SceneSpec sp;
  sp.id = "t3";
  sp.scenario = Scenario::DT;
  sp.ser_db = -5.0;
  sp.snr_db = 10.0;
  sp.near_speaker = corpus.speakers()[0];
  sp.far_speaker = corpus.speakers()[2];
  sp.echo_delay_s = 0.25;
  sp.seed = 19;
  auto a = build_scene(sp, corpus, 4.0);
  auto b = build_scene(sp, corpus, 4.0);
  CHECK(a.d.samples == b.d.samples);
  CHECK(a.y.samples == b.y.samples);
}

TEST_CASE("manifest round-trips") {
  const auto dir = fs::temp_directory_path() / "paec_manifest";
  fs::create_directories(dir);
  const auto path = (dir / "m.jsonl").string();

  write_manifest({}, path);
  CHECK(read_manifest(path).empty());

  ManifestEntry e;
  e.spec.id = "clip000001";
  e.spec.scenario = Scenario::DT;
  e.spec.ser_db = -3.5;
  e.spec.snr_db = 12.0;
  e.spec.n_interferers = 2;
  e.spec.echo_delay_s = 0.123;
  e.spec.distortion = Distortion::clip;
  e.spec.near_speaker = "spk001";
  e.spec.far_speaker = "spk002";
  e.spec.interferer_speakers = {"spk003", "spk004"};
  e.spec.seed = 987654321;
  e.paths = {{"d", "clips/c1/d.wav"}, {"s", "clips/c1/s.wav"},
             {"y", "clips/c1/y.wav"}, {"v", "clips/c1/v.wav"},
             {"z", "clips/c1/z.wav"}, {"enroll", "clips/c1/enroll.wav"},
             {"ref", "/abs/ref.wav"}};
  e.realized_ser_db = -3.51;
  e.realized_snr_db = 11.98;
  write_manifest({e}, path);
  auto back = read_manifest(path);
  REQUIRE(back.size() == 1);
  const auto& r = back[0];
  CHECK(r.spec.id == e.spec.id);
  CHECK(r.spec.scenario == e.spec.scenario);
  CHECK(r.spec.ser_db == e.spec.ser_db);
  CHECK(r.spec.snr_db == e.spec.snr_db);
  CHECK(r.spec.n_interferers == e.spec.n_interferers);
  CHECK(r.spec.echo_delay_s == e.spec.echo_delay_s);
  CHECK(r.spec.distortion == e.spec.distortion);
  CHECK(r.paths == e.paths);
  CHECK(r.realized_ser_db == e.realized_ser_db);
  CHECK(r.realized_snr_db == e.realized_snr_db);
  CHECK(r.spec.seed == e.spec.seed);
  CHECK(r.spec.interferer_speakers == e.spec.interferer_speakers);

  // NaN SER serializes as null and returns as NaN.
  e.realized_ser_db = std::nan("");
  write_manifest({e}, path);
  CHECK(std::isnan(read_manifest(path)[0].realized_ser_db));

  // Absolute and relative paths resolve against a root.
  CHECK(resolve_audio_path("/data", "clips/c1/d.wav") == "/data/clips/c1/d.wav");
  CHECK(resolve_audio_path("/data", "/abs/ref.wav") == "/abs/ref.wav");

  // Malformed line reports its number.
  {
    std::ofstream f(path, std::ios::app);
    f << "{not json\n";
  }
  try {
    read_manifest(path);
    FAIL("expected IoError");
  } catch (const IoError& err) {
    CHECK(std::string(err.what()).find(":2:") != std::string::npos);
  }
  fs::remove_all(dir);
}
