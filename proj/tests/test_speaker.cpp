#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include "paec/corpus.hpp"
#include "paec/errors.hpp"
#include "paec/speaker.hpp"

using namespace paec;

namespace {

double cosine(const std::vector<double>& a, const std::vector<double>& b) {
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  return dot / std::sqrt(na * nb);
}

} // namespace

TEST_CASE("fbank stats on white noise are finite with positive deviations") {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> g(0.0, 0.1);
  Waveform w;
  w.samples.resize(32000);
  for (auto& s : w.samples) s = g(rng);
  auto stats = compute_fbank_stats(w);
  REQUIRE(stats.v.size() == 160);
  for (double v : stats.v) CHECK(std::isfinite(v));
  for (int m = 80; m < 160; ++m) CHECK(stats.v[m] > 0.0);
}

TEST_CASE("fbank stats of a frame-periodic signal have near-zero deviation") {
  // Period equal to the hop makes every analysis frame identical.
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-0.3, 0.3);
  std::vector<double> period(160);
  for (auto& s : period) s = u(rng);
  Waveform w;
  w.samples.resize(32000);
  for (std::size_t i = 0; i < w.samples.size(); ++i)
    w.samples[i] = period[i % 160];
  auto stats = compute_fbank_stats(w);
  for (int m = 80; m < 160; ++m) CHECK(stats.v[m] < 1e-9);
}

TEST_CASE("fbank stats cluster by spectral envelope") {
  const auto chA = speaker_character(100);
  const auto chB = speaker_character(200);
  auto a1 = compute_fbank_stats(synth_utterance(chA, 1, 3.0));
  auto a2 = compute_fbank_stats(synth_utterance(chA, 2, 3.0));
  auto b1 = compute_fbank_stats(synth_utterance(chB, 3, 3.0));
  CHECK(cosine(a1.v, a2.v) > cosine(a1.v, b1.v));
}

TEST_CASE("fbank stats reject sub-second enrollment") {
  Waveform shorty(std::vector<double>(8000, 0.1));
  CHECK_THROWS_AS(compute_fbank_stats(shorty), DurationError);
}

TEST_CASE("stub embedding provider is deterministic and unit-norm") {
  StubEmbeddingProvider provider;
  auto w = synth_utterance(speaker_character(11), 4, 2.0);
  auto e1 = embed_speaker(w, provider);
  auto e2 = embed_speaker(w, provider);
  REQUIRE(e1.v.size() == 256);
  CHECK(e1.v == e2.v);
  double norm = 0.0;
  for (double v : e1.v) norm += v * v;
  CHECK(std::sqrt(norm) == doctest::Approx(1.0).epsilon(1e-6));

  auto other = embed_speaker(synth_utterance(speaker_character(12), 5, 2.0), provider);
  CHECK(cosine(e1.v, other.v) < 0.999);
}

TEST_CASE("file embedding provider: lookup, normalization, and errors") {
  namespace fs = std::filesystem;
  const auto dir = fs::temp_directory_path() / "paec_emb";
  fs::create_directories(dir);
  const auto path = (dir / "emb.txt").string();
  {
    std::ofstream f(path);
    f << "spk001";
    for (int i = 0; i < 256; ++i) f << ' ' << (i == 0 ? 2.0 : 0.0);
    f << '\n';
    f << "spk002";
    for (int i = 0; i < 256; ++i) f << ' ' << 0.1;
    f << '\n';
  }
  FileEmbeddingProvider provider(path);
  Waveform dummy(std::vector<double>(16000, 0.1));
  auto e = provider.embed(dummy, "spk001");
  CHECK(e.v[0] == doctest::Approx(1.0)); // normalized on ingestion
  CHECK_THROWS_AS(provider.embed(dummy, "nope"), ProviderError);

  {
    std::ofstream f(path);
    f << "bad 1 2 3\n";
  }
  CHECK_THROWS_AS(FileEmbeddingProvider{path}, ProviderError);
  CHECK_THROWS_AS(make_embedding_provider("file", ""), ProviderError);
  CHECK_THROWS_AS(make_embedding_provider("nope", ""), ProviderError);
  CHECK(make_embedding_provider("stub", "")->name() == "stub");
  fs::remove_all(dir);
}
