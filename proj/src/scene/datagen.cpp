#include "paec/datagen.hpp"

#include <cmath>
#include <filesystem>

#include "paec/wavio.hpp"

namespace fs = std::filesystem;

namespace paec {

SplitSummary write_dataset(const Corpus& corpus,
                           const std::vector<SceneSpec>& specs,
                           const std::string& out_dir, const std::string& split,
                           double clip_seconds) {
  const fs::path root(out_dir);
  fs::create_directories(root);
  std::vector<ManifestEntry> entries;
  entries.reserve(specs.size());
  SplitSummary summary;
  int ser_n = 0, snr_n = 0;

  for (const auto& spec : specs) {
    auto clip = build_scene(spec, corpus, clip_seconds);
    const fs::path clip_dir = root / split / "clips" / spec.id;
    fs::create_directories(clip_dir);
    ManifestEntry e;
    e.spec = clip.spec;
    const std::pair<const char*, const Waveform*> parts[] = {
        {"d", &clip.d},      {"s", &clip.s},      {"y", &clip.y},
        {"v", &clip.v},      {"z", &clip.z},      {"enroll", &clip.enrollment},
        {"ref", &clip.farend_ref}};
    for (const auto& [key, wave] : parts) {
      const fs::path rel = fs::path(split) / "clips" / spec.id / (std::string(key) + ".wav");
      write_wav((root / rel).string(), *wave, WavFormat::float32);
      e.paths[key] = rel.string();
    }
    e.realized_ser_db = clip.realized_ser_db;
    e.realized_snr_db = clip.realized_snr_db;
    entries.push_back(std::move(e));

    switch (spec.scenario) {
      case Scenario::DT:
        ++summary.dt;
        summary.mean_ser_abs_err += std::abs(clip.realized_ser_db - spec.ser_db);
        ++ser_n;
        break;
      case Scenario::FEST: ++summary.fest; break;
      case Scenario::NEST: ++summary.nest; break;
    }
    summary.mean_snr_abs_err += std::abs(clip.realized_snr_db - spec.snr_db);
    ++snr_n;
    ++summary.clips;
  }
  if (ser_n > 0) summary.mean_ser_abs_err /= ser_n;
  if (snr_n > 0) summary.mean_snr_abs_err /= snr_n;

  summary.manifest_path = (root / (split + ".jsonl")).string();
  write_manifest(entries, summary.manifest_path);
  return summary;
}

} // namespace paec
