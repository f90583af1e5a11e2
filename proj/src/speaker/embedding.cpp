#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

#include "paec/errors.hpp"
#include "paec/speaker.hpp"

namespace paec {
namespace {

void l2_normalize(std::vector<double>& v) {
  double n = 0.0;
  for (double x : v) n += x * x;
  n = std::sqrt(n);
  if (n <= 0.0) throw ProviderError("embedding: zero-norm vector");
  for (double& x : v) x /= n;
}

} // namespace

StubEmbeddingProvider::StubEmbeddingProvider(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  projection_.resize(256 * 160);
  for (auto& w : projection_) w = g(rng);
}

ProviderEmbedding StubEmbeddingProvider::embed(const Waveform& enrollment,
                                               const std::string&) {
  const auto stats = compute_fbank_stats(enrollment);
  ProviderEmbedding emb;
  emb.v.assign(256, 0.0);
  for (int i = 0; i < 256; ++i) {
    double acc = 0.0;
    for (int j = 0; j < 160; ++j) acc += projection_[i * 160 + j] * stats.v[j];
    emb.v[i] = acc;
  }
  l2_normalize(emb.v);
  return emb;
}

FileEmbeddingProvider::FileEmbeddingProvider(const std::string& table_path) {
  std::ifstream f(table_path);
  if (!f) throw ProviderError("embedding file: cannot open " + table_path);
  std::string line;
  int line_no = 0;
  while (std::getline(f, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string id;
    ss >> id;
    ProviderEmbedding emb;
    emb.v.reserve(256);
    double x;
    while (ss >> x) emb.v.push_back(x);
    if (emb.v.size() != 256)
      throw ProviderError("embedding file: " + table_path + ":" +
                          std::to_string(line_no) + ": expected 256 floats, got " +
                          std::to_string(emb.v.size()));
    l2_normalize(emb.v);
    table_[id] = std::move(emb);
  }
  if (table_.empty())
    throw ProviderError("embedding file: no entries in " + table_path);
}

ProviderEmbedding FileEmbeddingProvider::embed(const Waveform&,
                                               const std::string& speaker_id) {
  auto it = table_.find(speaker_id);
  if (it == table_.end())
    throw ProviderError("embedding file: no vector for speaker '" + speaker_id +
                        "'");
  return it->second;
}

std::unique_ptr<EmbeddingProvider> make_embedding_provider(
    const std::string& kind, const std::string& file_path) {
  if (kind == "stub") return std::make_unique<StubEmbeddingProvider>();
  if (kind == "file") {
    if (file_path.empty())
      throw ProviderError("embedding provider 'file' needs --embedding-file");
    return std::make_unique<FileEmbeddingProvider>(file_path);
  }
  throw ProviderError("unknown embedding provider '" + kind +
                      "' (expected stub or file)");
}

ProviderEmbedding embed_speaker(const Waveform& enrollment,
                                EmbeddingProvider& provider,
                                const std::string& speaker_id) {
  ProviderEmbedding emb = provider.embed(enrollment, speaker_id);
  if (emb.v.size() != 256)
    throw ProviderError("embedding provider returned " +
                        std::to_string(emb.v.size()) + " dims, expected 256");
  l2_normalize(emb.v);
  return emb;
}

} // namespace paec
