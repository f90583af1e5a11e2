#pragma once
// Line-delimited manifest of synthesized clips: one JSON object per line
// referencing the component WAV files plus every scene field. Relative
// audio paths resolve against a configurable root; absolute paths pass
// through unchanged.

#include <map>
#include <string>
#include <vector>

#include "paec/scene.hpp"

namespace paec {

struct ManifestEntry {
  SceneSpec spec;
  // Component name -> path. Keys: d, s, y, v, z, enroll, ref.
  std::map<std::string, std::string> paths;
  double realized_ser_db = 0.0; // NaN => stored as null (no near-end speech)
  double realized_snr_db = 0.0;
};

void write_manifest(const std::vector<ManifestEntry>& entries,
                    const std::string& path);
// Throws IoError naming the offending line on malformed input.
std::vector<ManifestEntry> read_manifest(const std::string& path);

std::string resolve_audio_path(const std::string& root, const std::string& path);

} // namespace paec
