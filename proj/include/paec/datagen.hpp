#pragma once
// Synthesizes clips for a list of scene specs and writes the split to disk:
// out_dir/<split>/clips/<id>/{d,s,y,v,z,enroll,ref}.wav plus
// out_dir/<split>.jsonl with paths relative to out_dir.

#include <string>
#include <vector>

#include "paec/corpus.hpp"
#include "paec/manifest.hpp"
#include "paec/scene.hpp"

namespace paec {

struct SplitSummary {
  std::string manifest_path;
  int clips = 0;
  int dt = 0, fest = 0, nest = 0;
  double mean_ser_abs_err = 0.0; // |realized - target| over DT clips
  double mean_snr_abs_err = 0.0;
};

SplitSummary write_dataset(const Corpus& corpus,
                           const std::vector<SceneSpec>& specs,
                           const std::string& out_dir, const std::string& split,
                           double clip_seconds);

} // namespace paec
