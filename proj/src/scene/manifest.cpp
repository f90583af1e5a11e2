#include "paec/manifest.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "paec/errors.hpp"

namespace paec {

using nlohmann::json;

namespace {

json entry_to_json(const ManifestEntry& e) {
  json j;
  j["id"] = e.spec.id;
  j["scenario"] = to_string(e.spec.scenario);
  j["ser_db"] = e.spec.ser_db;
  j["snr_db"] = e.spec.snr_db;
  j["n_interferers"] = e.spec.n_interferers;
  j["delay_s"] = e.spec.echo_delay_s;
  j["distortion"] = to_string(e.spec.distortion);
  j["paths"] = e.paths;
  if (std::isnan(e.realized_ser_db))
    j["realized_ser_db"] = nullptr;
  else
    j["realized_ser_db"] = e.realized_ser_db;
  j["realized_snr_db"] = e.realized_snr_db;
  j["seed"] = e.spec.seed;
  j["speakers"] = {{"near", e.spec.near_speaker},
                   {"far", e.spec.far_speaker},
                   {"interferers", e.spec.interferer_speakers}};
  return j;
}

ManifestEntry entry_from_json(const json& j) {
  ManifestEntry e;
  e.spec.id = j.at("id").get<std::string>();
  e.spec.scenario = scenario_from_string(j.at("scenario").get<std::string>());
  e.spec.ser_db = j.at("ser_db").get<double>();
  e.spec.snr_db = j.at("snr_db").get<double>();
  e.spec.n_interferers = j.at("n_interferers").get<int>();
  e.spec.echo_delay_s = j.at("delay_s").get<double>();
  e.spec.distortion = distortion_from_string(j.at("distortion").get<std::string>());
  e.paths = j.at("paths").get<std::map<std::string, std::string>>();
  e.realized_ser_db = j.at("realized_ser_db").is_null()
                          ? std::nan("")
                          : j.at("realized_ser_db").get<double>();
  e.realized_snr_db = j.at("realized_snr_db").get<double>();
  e.spec.seed = j.at("seed").get<std::uint64_t>();
  const auto& spk = j.at("speakers");
  e.spec.near_speaker = spk.at("near").get<std::string>();
  e.spec.far_speaker = spk.at("far").get<std::string>();
  e.spec.interferer_speakers =
      spk.at("interferers").get<std::vector<std::string>>();
  return e;
}

} // namespace

void write_manifest(const std::vector<ManifestEntry>& entries,
                    const std::string& path) {
  std::ofstream f(path);
  if (!f) throw IoError("write_manifest: cannot open " + path);
  for (const auto& e : entries) f << entry_to_json(e).dump() << '\n';
  if (!f) throw IoError("write_manifest: write failed: " + path);
}

std::vector<ManifestEntry> read_manifest(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw IoError("read_manifest: cannot open " + path);
  std::vector<ManifestEntry> out;
  std::string line;
  int line_no = 0;
  while (std::getline(f, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      out.push_back(entry_from_json(json::parse(line)));
    } catch (const std::exception& ex) {
      throw IoError("read_manifest: " + path + ":" + std::to_string(line_no) +
                    ": " + ex.what());
    }
  }
  return out;
}

std::string resolve_audio_path(const std::string& root, const std::string& path) {
  std::filesystem::path p(path);
  if (p.is_absolute()) return path;
  return (std::filesystem::path(root) / p).string();
}

} // namespace paec
