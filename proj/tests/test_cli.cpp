#include <doctest.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

#include "paec/checkpoint.hpp"
#include "paec/manifest.hpp"
#include "paec/signal.hpp"
#include "paec/wavio.hpp"
#include "testsupport.hpp"

using namespace paec;
namespace fs = std::filesystem;

namespace {

struct CliResult {
  int code = -1;
  std::string output;
};

CliResult run_cli(const std::string& args) {
  const std::string cmd = std::string(PAEC_CLI) + " " + args + " 2>&1";
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  CliResult result;
  char buf[512];
  while (fgets(buf, sizeof(buf), pipe) != nullptr) result.output += buf;
  const int rc = pclose(pipe);
  result.code = WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
  return result;
}

std::string slurp(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  return std::string((std::istreambuf_iterator<char>(f)),
                     std::istreambuf_iterator<char>());
}

const fs::path& work() {
  static fs::path dir = [] {
    auto d = fs::temp_directory_path() / "paec_cli";
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

} // namespace

TEST_CASE("datagen: usage errors leave no partial output") {
  auto r = run_cli("datagen --corpus /nonexistent --out " +
                   (work() / "nope").string() + " --hours 0.01 --seed 1");
  CHECK(r.code == 2);
  CHECK(!fs::exists(work() / "nope"));

  // A corpus directory with no speakers is rejected up front.
  fs::create_directories(work() / "empty_corpus");
  auto r2 = run_cli("datagen --corpus " + (work() / "empty_corpus").string() +
                    " --out " + (work() / "nope2").string() + " --hours 0.01");
  CHECK(r2.code == 2);
  CHECK(!fs::exists(work() / "nope2"));
}

TEST_CASE("synth-corpus and deterministic datagen") {
  const auto corpus = (work() / "corpus").string();
  auto r = run_cli("synth-corpus --out " + corpus +
                   " --speakers 12 --utterances 2 --seconds 6 --seed 5");
  REQUIRE(r.code == 0);

  const auto out_a = (work() / "data_a").string();
  const auto out_b = (work() / "data_b").string();
  const std::string common = " --hours 0.01 --val-minutes 0.2 --test-clips 2 "
                             "--clip-seconds 2 --seed 7";
  auto ra = run_cli("datagen --corpus " + corpus + " --out " + out_a + common);
  REQUIRE(ra.code == 0);
  CHECK(ra.output.find("train:") != std::string::npos);
  auto rb = run_cli("datagen --corpus " + corpus + " --out " + out_b + common);
  REQUIRE(rb.code == 0);
  CHECK(slurp(out_a + "/train.jsonl") == slurp(out_b + "/train.jsonl"));
  CHECK(slurp(out_a + "/test.jsonl") == slurp(out_b + "/test.jsonl"));

  // Disjoint speakers across splits.
  auto train = read_manifest(out_a + "/train.jsonl");
  auto test = read_manifest(out_a + "/test.jsonl");
  for (const auto& a : train)
    for (const auto& b : test) {
      CHECK(a.spec.near_speaker != b.spec.near_speaker);
      CHECK(a.spec.near_speaker != b.spec.far_speaker);
    }
}

TEST_CASE("train: argument validation") {
  const auto& td = testsupport::toy_dataset("cli", 3, 1, 1, 1.2, 123);
  auto r = run_cli("train --variant bogus --manifest " + td.manifest + " --out " +
                   (work() / "t1").string());
  CHECK(r.code == 2);
  CHECK(r.output.find("tdpf2") != std::string::npos); // lists valid variants

  auto r2 = run_cli("train --variant tdpf2 --strategy finetune --manifest " +
                    td.manifest + " --out " + (work() / "t2").string() +
                    " --stage1 " + (work() / "missing_ck").string() +
                    " --steps 1 --width 8");
  CHECK(r2.code == 2);
  CHECK(r2.output.find("missing_ck") != std::string::npos);
}

TEST_CASE("pretrain then freeze-train end to end via the CLI") {
  const auto& td = testsupport::toy_dataset("cli", 3, 1, 1, 1.2, 123);
  const auto s1 = (work() / "ck_s1").string();
  const auto s2 = (work() / "ck_s2").string();

  auto r1 = run_cli("pretrain --task echo_map --manifest " + td.manifest +
                    " --out " + s1 + " --steps 3 --width 8 --seed 3");
  REQUIRE(r1.code == 0);
  auto r2 = run_cli("pretrain --task pse --manifest " + td.manifest + " --out " +
                    s2 + " --steps 2 --width 8 --seed 4");
  REQUIRE(r2.code == 0);

  const auto out = (work() / "ck_tdpf2").string();
  auto r3 = run_cli("train --variant tdpf2 --strategy finetune_freeze --manifest " +
                    td.manifest + " --out " + out + " --stage1 " + s1 +
                    " --stage2 " + s2 + " --steps 3 --width 8 --seed 5");
  REQUIRE(r3.code == 0);

  // Frozen stage-1 weights surface bit-identically in the output checkpoint.
  auto pre = load_checkpoint(s1);
  auto fin = load_checkpoint(out);
  for (const auto& [name, data] : pre.weights) {
    REQUIRE(fin.weights.count(name) == 1);
    CHECK(fin.weights.at(name) == data);
  }
  CHECK(fin.step == 3);

  // Resume continues the monotone step counter.
  auto r4 = run_cli("train --variant tdpf2 --strategy finetune_freeze --manifest " +
                    td.manifest + " --out " + out + " --stage1 " + s1 +
                    " --stage2 " + s2 + " --steps 5 --width 8 --seed 5 --resume");
  REQUIRE(r4.code == 0);
  CHECK(load_checkpoint(out).step == 5);
}

TEST_CASE("eval runs without a PESQ hook and with a fake one") {
  const auto& td = testsupport::toy_dataset("cli", 3, 1, 1, 1.2, 123);
  const auto ck = (work() / "ck_aec").string();
  auto r0 = run_cli("pretrain --task aec_ns --manifest " + td.manifest +
                    " --out " + ck + " --steps 2 --width 8 --seed 6");
  REQUIRE(r0.code == 0);

  auto r = run_cli("eval --checkpoint " + ck + " --manifest " + td.manifest +
                   " --out " + (work() / "report").string());
  CHECK(r.code == 0);
  CHECK(r.output.find("ST-FE(ERLE)") != std::string::npos);
  CHECK(r.output.find("n/a") != std::string::npos); // PESQ unavailable
  CHECK(fs::exists(work() / "report.txt"));
  CHECK(fs::exists(work() / "report.json"));

  auto r2 = run_cli("eval --checkpoint " + ck + " --manifest " + td.manifest +
                    " --pesq-cmd \"echo 2.5 '{ref}' '{deg}' | cut -d' ' -f1\"");
  CHECK(r2.code == 0);
  CHECK(r2.output.find("2.50") != std::string::npos);
}

TEST_CASE("infer produces output audio and stage dumps") {
  const auto& td = testsupport::toy_dataset("cli", 3, 1, 1, 1.2, 123);
  // Reuse dataset component audio as mic/ref/enroll.
  auto entries = read_manifest(td.manifest);
  REQUIRE(!entries.empty());
  const auto& e = entries[0];
  const auto mic = resolve_audio_path(td.out_dir, e.paths.at("d"));
  const auto ref = resolve_audio_path(td.out_dir, e.paths.at("ref"));
  const auto enroll = resolve_audio_path(td.out_dir, e.paths.at("enroll"));

  const auto s1 = (work() / "ck_s1").string();
  const auto s2 = (work() / "ck_s2").string();
  const auto tdpf = (work() / "ck_tdpf2").string();
  REQUIRE(checkpoint_exists(tdpf)); // built in the earlier case

  const auto out_wav = (work() / "enhanced.wav").string();
  const auto dump = (work() / "stages").string();
  auto r = run_cli("infer --mic " + mic + " --ref " + ref + " --enroll " + enroll +
                   " --checkpoint " + tdpf + " --out " + out_wav +
                   " --dump-stages " + dump);
  REQUIRE(r.code == 0);
  CHECK(r.output.find("erle_db=") != std::string::npos);
  auto out = read_wav(out_wav);
  auto mic_w = read_wav(mic);
  // Output length equals input length minus the trailing partial frame.
  const std::size_t frames = 1 + (mic_w.size() - 320) / 160;
  CHECK(out.size() == (frames - 1) * 160 + 320);
  CHECK(fs::exists(fs::path(dump) / "stage1.png"));
  CHECK(fs::exists(fs::path(dump) / "stage2.png"));
  CHECK(fs::exists(fs::path(dump) / "stage1.wav"));
}

TEST_CASE("plot: zero signal, determinism, one panel per input") {
  const auto dir = work() / "plots";
  fs::create_directories(dir);
  const auto zero_wav = (dir / "zero.wav").string();
  write_wav(zero_wav, Waveform(std::vector<double>(16000, 0.0)));
  const auto tone_wav = (dir / "tone.wav").string();
  Waveform tone;
  tone.samples.resize(16000);
  for (std::size_t i = 0; i < tone.samples.size(); ++i)
    tone.samples[i] = 0.4 * std::sin(2.0 * 3.14159265358979 * 500.0 * i / 16000.0);
  write_wav(tone_wav, tone);

  const auto out1 = (dir / "out1").string();
  auto r = run_cli("plot --out " + out1 + " " + zero_wav + " " + tone_wav);
  REQUIRE(r.code == 0);
  CHECK(fs::exists(fs::path(out1) / "zero.png"));
  CHECK(fs::exists(fs::path(out1) / "tone.png"));
  int png_count = 0;
  for (const auto& f : fs::directory_iterator(out1))
    if (f.path().extension() == ".png") ++png_count;
  CHECK(png_count == 2);

  const auto out2 = (dir / "out2").string();
  auto r2 = run_cli("plot --out " + out2 + " " + zero_wav + " " + tone_wav);
  REQUIRE(r2.code == 0);
  CHECK(slurp((fs::path(out1) / "tone.png").string()) ==
        slurp((fs::path(out2) / "tone.png").string()));

  // The zero panel is a uniform floor: every pixel identical.
  const auto bytes = slurp((fs::path(out1) / "zero.png").string());
  CHECK(!bytes.empty());
}

TEST_CASE("experiment config file supplies defaults and rejects unknown keys") {
  const auto dir = work() / "config";
  fs::create_directories(dir);
  const auto cfg_path = (dir / "exp.json").string();
  {
    std::ofstream f(cfg_path);
    f << R"({"variant": "tdpf2", "train": {"steps": 2, "lr": 0.001},)"
      << R"( "seed": 9, "dsp": {"mu": 0.4}})";
  }
  const auto& td = testsupport::toy_dataset("cli", 3, 1, 1, 1.2, 123);
  const auto s1 = (work() / "ck_s1").string();
  REQUIRE(checkpoint_exists(s1));
  const auto s2 = (work() / "ck_s2").string();
  const auto out = (work() / "ck_cfg").string();
  // --steps comes from the config; width flag keeps the tiny model.
  auto r = run_cli("train --config " + cfg_path +
                   " --strategy finetune --manifest " + td.manifest + " --out " +
                   out + " --stage1 " + s1 + " --stage2 " + s2 + " --width 8");
  REQUIRE(r.code == 0);
  CHECK(load_checkpoint(out).step == 2);

  {
    std::ofstream f(cfg_path);
    f << R"({"varaint": "tdpf2"})"; // misspelled key
  }
  auto r2 = run_cli("train --config " + cfg_path + " --manifest " + td.manifest +
                    " --out " + out + " --width 8");
  CHECK(r2.code == 2);
  CHECK(r2.output.find("unknown key") != std::string::npos);
}
