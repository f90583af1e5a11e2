#pragma once
// Shared fixtures: a small synthetic corpus and a deterministic toy dataset
// with a fixed scenario mix.

#include <filesystem>
#include <string>
#include <vector>

#include "paec/corpus.hpp"
#include "paec/datagen.hpp"
#include "paec/model.hpp"
#include "paec/scene.hpp"

namespace paec::testsupport {

struct ToyData {
  std::string out_dir;
  std::string manifest;
};

// n_dt + n_fest + n_nest clips of clip_s seconds under a stable temp dir.
inline ToyData toy_dataset(const std::string& tag, int n_dt, int n_fest,
                           int n_nest, double clip_s, std::uint64_t seed) {
  namespace fs = std::filesystem;
  const fs::path base = fs::temp_directory_path() / ("paec_toy_" + tag);
  const fs::path corpus_dir = base / "corpus";
  const fs::path out_dir = base / "data";
  ToyData td;
  td.out_dir = out_dir.string();
  td.manifest = (out_dir / "train.jsonl").string();
  if (fs::exists(td.manifest)) return td; // reuse across test cases

  make_synthetic_corpus(corpus_dir.string(), 6, 3, clip_s, seed);
  Corpus corpus(corpus_dir.string());
  const auto& spk = corpus.speakers();

  std::vector<SceneSpec> specs;
  int id = 0;
  auto push = [&](Scenario sc, int count) {
    for (int i = 0; i < count; ++i) {
      SceneSpec sp;
      char buf[32];
      std::snprintf(buf, sizeof(buf), "clip%06d", id);
      sp.id = buf;
      sp.scenario = sc;
      sp.ser_db = -6.0 + 3.0 * (id % 5);
      sp.snr_db = 5.0 + 4.0 * (id % 4);
      sp.echo_delay_s = 0.05 * (id % 3);
      sp.n_interferers = sc == Scenario::FEST ? 0 : (id % 2);
      sp.near_speaker = spk[static_cast<std::size_t>(id) % spk.size()];
      sp.far_speaker = spk[(static_cast<std::size_t>(id) + 1) % spk.size()];
      for (int k = 0; k < sp.n_interferers; ++k)
        sp.interferer_speakers.push_back(
            spk[(static_cast<std::size_t>(id) + 2 + k) % spk.size()]);
      sp.seed = seed * 1000 + static_cast<std::uint64_t>(id);
      specs.push_back(std::move(sp));
      ++id;
    }
  };
  push(Scenario::DT, n_dt);
  push(Scenario::FEST, n_fest);
  push(Scenario::NEST, n_nest);

  write_dataset(corpus, specs, out_dir.string(), "train", clip_s);
  return td;
}

inline ModelVariantConfig tiny_variant(Variant v) {
  auto cfg = default_variant_config(v, 8, 12);
  for (auto& sc : cfg.stages) {
    sc.ftlstm_hidden = 8;
    sc.mca_heads = 2;
    sc.mca_dim = 8;
    sc.spk_bilstm_hidden = 6;
  }
  return cfg;
}

} // namespace paec::testsupport
