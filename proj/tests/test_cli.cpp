#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "support.hpp"

namespace {

int run(const std::string& args) {
  const std::string cmd = std::string(TRACTFIT_CLI) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

void write_text(const std::filesystem::path& p, const std::string& s) { std::ofstream(p) << s; }

nlohmann::json read_json(const std::filesystem::path& p) {
  std::ifstream f(p);
  return nlohmann::json::parse(f);
}

}  // namespace

TEST_CASE("synth, match and stoi round trip") {
  const auto d = tf_test::temp_dir("cli");
  write_text(d / "p.json", R"({"pitch_hz": 140, "voiceness": 0.9})");
  REQUIRE(run("synth --params " + (d / "p.json").string() + " --duration 1 --out " + (d / "t.wav").string()) == 0);
  CHECK(std::filesystem::file_size(d / "t.wav") == 44 + 48000 * 4);

  REQUIRE(run("match --target " + (d / "t.wav").string() + " --method pso --repr mel --max-evals 20 --out " +
              (d / "m.json").string() + " --resynth " + (d / "r.wav").string()) == 0);
  const auto j = read_json(d / "m.json");
  CHECK(j.at("n_evals").get<int>() <= 20);
  CHECK(j.at("estimate").contains("pitch_hz"));
  CHECK(std::filesystem::exists(d / "r.wav"));

  CHECK(run("stoi --ref " + (d / "t.wav").string() + " --deg " + (d / "r.wav").string()) == 0);
}

TEST_CASE("keyframe trajectories and windowed matching") {
  const auto d = tf_test::temp_dir("cli_traj");
  write_text(d / "k.json", R"({"keyframes": [{"time_s": 0, "params": {"pitch_hz": 100}},
                                             {"time_s": 0.3, "params": {"pitch_hz": 200}}]})");
  REQUIRE(run("synth --params " + (d / "k.json").string() + " --duration 0.3 --encoding pcm16 --out " +
              (d / "g.wav").string()) == 0);
  REQUIRE(run("match --target " + (d / "g.wav").string() + " --windowed --method nm --max-evals 2 --out " +
              (d / "w.json").string()) == 0);
  CHECK(read_json(d / "w.json").at("windows").size() == 3);
}

TEST_CASE("dataset, bench and report") {
  const auto d = tf_test::temp_dir("cli_bench");
  REQUIRE(run("dataset --n 2 --seed 4 --duration 0.2 --out " + (d / "ds").string()) == 0);
  CHECK(std::filesystem::exists(d / "ds" / "manifest.json"));

  write_text(d / "cfg.json", R"({"experiment": "all_params", "optimizers": ["ga", "nm"], "representations": ["mel"],
                                 "repetitions": 1, "max_evals": 4, "clip_duration_s": 0.1, "compute_stoi": false})");
  REQUIRE(run("bench --config " + (d / "cfg.json").string() + " --out-dir " + (d / "out").string()) == 0);
  CHECK(std::filesystem::exists(d / "out" / "report.csv"));
  CHECK(std::filesystem::exists(d / "out" / "config.json"));
  CHECK(std::filesystem::exists(d / "out" / "plots" / "timing.svg"));
  CHECK(run("report --csv " + (d / "out" / "report.csv").string() + " --plots-dir " + (d / "plots2").string()) == 0);
  CHECK(std::filesystem::exists(d / "plots2" / "audio_mae.svg"));
}

TEST_CASE("failed cells exit with 3") {
  const auto d = tf_test::temp_dir("cli_fail");
  std::filesystem::create_directories(d / "targets");
  write_text(d / "targets" / "broken.wav", "nope");
  write_text(d / "cfg.json", R"({"experiment": "real_audio", "optimizers": ["nm"], "representations": ["mel"],
                                 "repetitions": 1, "max_evals": 2, "compute_stoi": false, "target_dir": ")" +
                                 (d / "targets").string() + "\"}");
  CHECK(run("bench --config " + (d / "cfg.json").string() + " --out-dir " + (d / "out").string()) == 3);
}

TEST_CASE("usage errors exit with 1, I/O errors with 2") {
  const auto d = tf_test::temp_dir("cli_err");
  CHECK(run("") == 1);
  CHECK(run("match --target x.wav --repr cqt") == 1);
  CHECK(run("synth --duration 1") == 1);
  write_text(d / "bad.json", R"({"velum": 1})");
  CHECK(run("synth --params " + (d / "bad.json").string() + " --out " + (d / "x.wav").string()) == 1);
  write_text(d / "unknown.json", R"({"repetition": 2})");
  CHECK(run("bench --config " + (d / "unknown.json").string() + " --out-dir " + (d / "o").string()) == 1);
  CHECK(run("match --target " + (d / "missing.wav").string()) == 2);
  CHECK(run("synth --params " + (d / "missing.json").string() + " --out " + (d / "x.wav").string()) == 2);
  write_text(d / "junk.wav", "not audio");
  CHECK(run("stoi --ref " + (d / "junk.wav").string() + " --deg " + (d / "junk.wav").string()) == 2);
}
