#include "paec/evaluator.hpp"

#include <array>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <sstream>

#include <json.hpp>

#include "paec/errors.hpp"
#include "paec/metrics.hpp"
#include "paec/trainer.hpp"
#include "paec/wavio.hpp"

namespace fs = std::filesystem;

namespace paec {
namespace {

std::string fill_template(const std::string& tmpl, const std::string& ref,
                          const std::string& deg) {
  std::string out = tmpl;
  auto replace_all = [&](const std::string& key, const std::string& value) {
    std::size_t pos = 0;
    while ((pos = out.find(key, pos)) != std::string::npos) {
      out.replace(pos, key.size(), value);
      pos += value.size();
    }
  };
  replace_all("{ref}", ref);
  replace_all("{deg}", deg);
  return out;
}

void add_sample(EvalCell& cell, double value) {
  cell.mean = (cell.mean * cell.count + value) / (cell.count + 1);
  ++cell.count;
  cell.available = true;
}

std::string fmt_cell(const EvalCell& c) {
  if (!c.available) return "n/a";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", c.mean);
  return buf;
}

} // namespace

std::optional<double> run_score_hook(const std::string& cmd_template,
                                     const std::string& ref_wav,
                                     const std::string& deg_wav) {
  const std::string cmd = fill_template(cmd_template, ref_wav, deg_wav);
  FILE* pipe = popen(cmd.c_str(), "r");
  if (pipe == nullptr) return std::nullopt;
  std::string output;
  char buf[256];
  while (fgets(buf, sizeof(buf), pipe) != nullptr) output += buf;
  const int rc = pclose(pipe);
  if (rc != 0) return std::nullopt;
  std::istringstream ss(output);
  double score;
  if (ss >> score) return score;
  return std::nullopt;
}

std::string EvalReport::table() const {
  std::ostringstream os;
  os << "variant            Para.(M)  ST-FE(ERLE)  DT(WB-PESQ)  ST-NE(WB-PESQ)  ST-NE(SI-SNR)\n";
  char line[256];
  std::snprintf(line, sizeof(line), "%-18s %8.2f  %11s  %11s  %14s  %13s\n",
                label.c_str(), params_millions, fmt_cell(fest_erle).c_str(),
                fmt_cell(dt_pesq).c_str(), fmt_cell(nest_pesq).c_str(),
                fmt_cell(nest_sisnr).c_str());
  os << line;
  os << "counts: FEST=" << fest_erle.count << " DT=" << dt_pesq.count
     << " NEST=" << nest_sisnr.count << " skipped=" << skipped << "\n";
  return os.str();
}

std::string EvalReport::to_json() const {
  nlohmann::json j;
  j["label"] = label;
  j["params_millions"] = params_millions;
  auto cell = [](const EvalCell& c) {
    return c.available
               ? nlohmann::json{{"mean", c.mean}, {"count", c.count}}
               : nlohmann::json{{"mean", nullptr}, {"count", c.count}};
  };
  j["fest_erle"] = cell(fest_erle);
  j["dt_wb_pesq"] = cell(dt_pesq);
  j["nest_wb_pesq"] = cell(nest_pesq);
  j["nest_si_snr"] = cell(nest_sisnr);
  j["skipped"] = skipped;
  return j.dump(2);
}

EvalReport evaluate_pipeline(const PipelineFn& pipeline, const ClipDataset& ds,
                             const EvalOptions& opts, const std::string& label) {
  EvalReport report;
  report.label = label;
  const bool pesq = !opts.pesq_cmd.empty();
  fs::path work = opts.work_dir.empty() ? fs::temp_directory_path() / "paec_eval"
                                        : fs::path(opts.work_dir);
  if (pesq) fs::create_directories(work);

  for (std::size_t i = 0; i < ds.size(); ++i) {
    ClipAudio clip;
    Waveform out;
    try {
      clip = ds.load(i);
      out = pipeline(clip);
    } catch (const Error& e) {
      std::fprintf(stderr, "eval: skipping clip %s: %s\n",
                   ds.entry(i).spec.id.c_str(), e.what());
      ++report.skipped;
      continue;
    }
    const Scenario sc = clip.spec.scenario;
    if (sc == Scenario::FEST) {
      add_sample(report.fest_erle, erle(clip.d, out));
    } else {
      Waveform target = clip.s;
      target.samples.resize(std::min(target.size(), out.size()));
      Waveform trimmed = out;
      trimmed.samples.resize(target.size());
      if (sc == Scenario::NEST)
        add_sample(report.nest_sisnr, si_snr(trimmed, target));
      if (pesq) {
        const auto refp = work / (clip.spec.id + "_ref.wav");
        const auto degp = work / (clip.spec.id + "_deg.wav");
        write_wav(refp.string(), target);
        write_wav(degp.string(), trimmed);
        auto score = run_score_hook(opts.pesq_cmd, refp.string(), degp.string());
        fs::remove(refp);
        fs::remove(degp);
        if (score) {
          if (sc == Scenario::DT)
            add_sample(report.dt_pesq, *score);
          else
            add_sample(report.nest_pesq, *score);
        } else {
          std::fprintf(stderr, "eval: score hook failed for clip %s\n",
                       clip.spec.id.c_str());
        }
      }
    }
  }
  return report;
}

PipelineFn make_model_pipeline(TdpfModel<float>& model,
                               EmbeddingProvider& provider,
                               const NlmsConfig& nlms_cfg) {
  return [&model, &provider, nlms_cfg](const ClipAudio& clip) -> Waveform {
    Waveform e_sig, y_lin;
    const double ref_rms = rms(clip.ref);
    if (ref_rms > 1e-7 &&
        clip.ref.size() >= static_cast<std::size_t>(kSampleRate)) {
      auto delay = estimate_delay(clip.d, clip.ref);
      auto aligned = align_reference(clip.ref, delay);
      auto out = nlms_run(clip.d, aligned, nlms_cfg);
      e_sig = std::move(out.e);
      y_lin = std::move(out.y_lin);
    } else {
      e_sig = clip.d;
      y_lin.samples.assign(clip.d.size(), 0.0);
    }
    std::optional<SpeakerInputs<float>> spk;
    bool needs_spk = model.config().two_stage();
    for (const auto& sc : model.config().stages)
      needs_spk = needs_spk || sc.speaker_conditioning;
    if (needs_spk) {
      auto emb = embed_speaker(clip.enroll, provider, clip.spec.near_speaker);
      spk = make_speaker_inputs<float>(clip.enroll, emb.v);
    }
    return model_forward(model, clip.d, e_sig, y_lin, spk ? &*spk : nullptr);
  };
}

EvalReport evaluate_checkpoint(const std::string& checkpoint_dir,
                               const ClipDataset& ds, EmbeddingProvider& provider,
                               const EvalOptions& opts) {
  auto model = model_from_checkpoint(checkpoint_dir);
  auto pipeline = make_model_pipeline(model, provider, opts.nlms);
  EvalReport report = evaluate_pipeline(pipeline, ds, opts,
                                        to_string(model.config().variant));
  report.params_millions =
      static_cast<double>(model.params().total_params()) / 1e6;
  return report;
}

} // namespace paec
