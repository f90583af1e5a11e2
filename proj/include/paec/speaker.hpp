#pragma once
// Enrollment-derived speaker features: 80-band log-mel statistics (temporal
// mean ++ standard deviation -> 160 dims) and a 256-dim unit-norm provider
// embedding. The reference speaker-verification network is external; the
// built-in stub provider projects the FBank statistics through a fixed
// seeded random matrix so the pipeline runs self-contained.

#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "paec/signal.hpp"

namespace paec {

struct FBankStats {
  std::vector<double> v; // 160: mean(80) ++ std(80)
};

struct ProviderEmbedding {
  std::vector<double> v; // 256, unit L2 norm
};

// 80 mel bands over 0-8 kHz, 20 ms / 10 ms framing, log energies.
// Requires at least 1 s of enrollment audio.
FBankStats compute_fbank_stats(const Waveform& enrollment);

class EmbeddingProvider {
 public:
  virtual ~EmbeddingProvider() = default;
  // speaker_id may be empty; file-backed providers need it.
  virtual ProviderEmbedding embed(const Waveform& enrollment,
                                  const std::string& speaker_id) = 0;
  virtual std::string name() const = 0;
};

// Deterministic: fixed random projection (seeded) of the FBank statistics.
class StubEmbeddingProvider : public EmbeddingProvider {
 public:
  explicit StubEmbeddingProvider(std::uint64_t seed = 0x57ab1eULL);
  ProviderEmbedding embed(const Waveform& enrollment,
                          const std::string& speaker_id) override;
  std::string name() const override { return "stub"; }

 private:
  std::vector<double> projection_; // 256 x 160
};

// Loads "speaker_id v0 .. v255" lines; vectors are L2-normalized on ingestion.
class FileEmbeddingProvider : public EmbeddingProvider {
 public:
  explicit FileEmbeddingProvider(const std::string& table_path);
  ProviderEmbedding embed(const Waveform& enrollment,
                          const std::string& speaker_id) override;
  std::string name() const override { return "file"; }

 private:
  std::map<std::string, ProviderEmbedding> table_;
};

std::unique_ptr<EmbeddingProvider> make_embedding_provider(
    const std::string& kind, const std::string& file_path);

ProviderEmbedding embed_speaker(const Waveform& enrollment,
                                EmbeddingProvider& provider,
                                const std::string& speaker_id = "");

} // namespace paec
