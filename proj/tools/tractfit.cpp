// tractfit: command-line front end for synthesis, matching and benchmarks.
//
// Exit codes: 0 success, 1 usage error, 2 I/O error, 3 benchmark finished
// with failed cells.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "tractfit/audio_io.hpp"
#include "tractfit/bench.hpp"
#include "tractfit/inversion.hpp"
#include "tractfit/quality.hpp"
#include "tractfit/vocal_tract.hpp"

using namespace tractfit;
using nlohmann::json;

namespace {

enum Exit { kOk = 0, kUsage = 1, kIo = 2, kFailedCells = 3 };

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

json load_json(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot open " + path);
  try {
    return json::parse(f);
  } catch (const json::parse_error& e) {
    throw std::invalid_argument(path + ": " + e.what());
  }
}

void save_json(const std::filesystem::path& path, const json& j) {
  std::ofstream f(path);
  if (!f) throw IoError("cannot open " + path.string() + " for writing");
  f << j.dump(2) << '\n';
  if (!f) throw IoError("write failed for " + path.string());
}

// Controls from a {"pitch_hz": ..., ...} object; omitted ones are mid-range.
TractParams params_from_json(const json& j) {
  if (!j.is_object()) throw std::invalid_argument("params must be a JSON object");
  ParamArray a = mid_params().values();
  for (const auto& [key, value] : j.items()) {
    const auto p = param_from_name(key);
    if (!p) throw std::invalid_argument("unknown parameter '" + key + "'");
    a[index_of(*p)] = value.get<double>();
  }
  return TractParams(a);
}

json params_to_json(const TractParams& p) {
  json j;
  for (std::size_t i = 0; i < kNumParams; ++i) j[std::string(kParamInfo[i].name)] = p.values()[i];
  return j;
}

ParamTrajectory trajectory_from_json(const json& j) {
  if (j.contains("keyframes")) {
    std::vector<Keyframe> keys;
    for (const auto& k : j.at("keyframes")) keys.push_back({k.at("time_s").get<double>(), params_from_json(k.at("params"))});
    return ParamTrajectory(std::move(keys));
  }
  return ParamTrajectory::constant(params_from_json(j.contains("params") ? j.at("params") : j));
}

WavEncoding encoding_from(const std::string& s) {
  if (s == "pcm16") return WavEncoding::Pcm16;
  if (s == "float32") return WavEncoding::Float32;
  throw std::invalid_argument("unknown encoding '" + s + "'");
}

json result_to_json(const MatchResult& r) {
  json j;
  j["estimate"] = params_to_json(r.estimate);
  j["best_cost"] = r.optimization.best_cost;
  j["n_evals"] = r.optimization.n_evals;
  j["n_iterations"] = r.optimization.n_iterations;
  j["elapsed_s"] = r.optimization.elapsed_s;
  j["stop_reason"] = to_string(r.optimization.stop_reason);
  j["audio_mae"] = r.audio_mae;
  return j;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Vocal tract synthesis and sound matching"};
  app.require_subcommand(1);

  // synth
  auto* synth = app.add_subcommand("synth", "Render controls or a keyframe trajectory to WAV");
  std::string synth_params, synth_out, synth_encoding = "float32";
  double synth_duration = 1.0;
  std::uint64_t synth_seed = 0;
  synth->add_option("--params", synth_params, "JSON file: parameter object or {\"keyframes\": [...]}")->required();
  synth->add_option("--duration", synth_duration, "Seconds")->check(CLI::PositiveNumber);
  synth->add_option("--seed", synth_seed, "Noise seed");
  synth->add_option("--encoding", synth_encoding, "pcm16 or float32")->check(CLI::IsMember({"pcm16", "float32"}));
  synth->add_option("--out", synth_out, "Output WAV")->required();

  // dataset
  auto* dataset = app.add_subcommand("dataset", "Generate random self-synthesized targets");
  std::size_t ds_n = 80;
  std::uint64_t ds_seed = 0;
  double ds_duration = 1.0;
  std::string ds_out;
  dataset->add_option("--n", ds_n, "Number of clips")->check(CLI::PositiveNumber);
  dataset->add_option("--seed", ds_seed, "Master seed");
  dataset->add_option("--duration", ds_duration, "Seconds per clip")->check(CLI::PositiveNumber);
  dataset->add_option("--out", ds_out, "Output directory")->required();

  // match
  auto* match_cmd = app.add_subcommand("match", "Estimate controls for a target WAV");
  std::string m_target, m_repr = "multiscale", m_method = "ga", m_out, m_resynth;
  bool m_windowed = false;
  double m_window_ms = 100.0;
  std::uint64_t m_seed = 0;
  std::size_t m_max_evals = 2000;
  unsigned m_threads = 1;
  match_cmd->add_option("--target", m_target, "Mono 48 kHz WAV")->required();
  match_cmd->add_option("--repr", m_repr, "stft|multiscale|mel|mfcc")
      ->check(CLI::IsMember({"stft", "multiscale", "mel", "mfcc"}));
  match_cmd->add_option("--method", m_method, "ga|pso|cmaes|nm|trf")->check(CLI::IsMember({"ga", "pso", "cmaes", "nm", "trf"}));
  match_cmd->add_flag("--windowed", m_windowed, "Match 100 ms windows and smooth the trajectory");
  match_cmd->add_option("--window-ms", m_window_ms, "Window length for --windowed")->check(CLI::PositiveNumber);
  match_cmd->add_option("--seed", m_seed, "Optimizer seed");
  match_cmd->add_option("--max-evals", m_max_evals, "Evaluation budget (per window when windowed)")
      ->check(CLI::PositiveNumber);
  match_cmd->add_option("--threads", m_threads, "Parallel objective evaluations (0: all cores)");
  match_cmd->add_option("--out", m_out, "Result JSON (stdout when omitted)");
  match_cmd->add_option("--resynth", m_resynth, "Write the resynthesized WAV here");

  // bench
  auto* bench = app.add_subcommand("bench", "Run an experiment grid");
  std::string b_config, b_out;
  bench->add_option("--config", b_config, "Experiment JSON")->required();
  bench->add_option("--out-dir", b_out, "Output directory")->required();

  // stoi
  auto* stoi_cmd = app.add_subcommand("stoi", "Intelligibility of a degraded clip against a reference");
  std::string s_ref, s_deg;
  stoi_cmd->add_option("--ref", s_ref, "Reference WAV")->required();
  stoi_cmd->add_option("--deg", s_deg, "Degraded WAV")->required();

  // report
  auto* report_cmd = app.add_subcommand("report", "Render plots from a report CSV");
  std::string r_csv, r_plots;
  report_cmd->add_option("--csv", r_csv, "Report CSV")->required();
  report_cmd->add_option("--plots-dir", r_plots, "Output directory for SVG plots")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kUsage;
  }

  try {
    if (*synth) {
      SynthConfig sc;
      sc.seed = synth_seed;
      const AudioClip clip = synthesize_trajectory(trajectory_from_json(load_json(synth_params)), synth_duration, sc);
      const std::size_t clipped = write_wav(synth_out, clip, encoding_from(synth_encoding));
      if (clipped) std::cerr << "warning: " << clipped << " samples clipped\n";
    } else if (*dataset) {
      const auto m = generate_dataset(ds_n, ds_seed, ds_out, ds_duration);
      std::cout << "wrote " << m.entries.size() << " clips and manifest.json to " << ds_out << '\n';
    } else if (*match_cmd) {
      MatchTask task;
      task.target = read_wav(m_target);
      task.repr = *repr_from_string(m_repr);
      task.optimizer.method = *method_from_string(m_method);
      task.optimizer.seed = m_seed;
      task.optimizer.threads = m_threads;
      task.stop.max_evals = m_max_evals;
      json out;
      AudioClip resynth;
      if (m_windowed) {
        WindowedOptions opt;
        opt.window_ms = m_window_ms;
        const TrajectoryResult tr = match_windowed(task, opt);
        const int fs = task.target.sample_rate_hz;
        json windows = json::array();
        std::size_t evals = 0;
        for (std::size_t i = 0; i < tr.windows.size(); ++i) {
          json w = result_to_json(tr.windows[i]);
          w["start_s"] = static_cast<double>(tr.window_begin(i)) / fs;
          w["smoothed"] = params_to_json(denormalize(tr.smoothed[i]));
          evals += tr.windows[i].optimization.n_evals;
          windows.push_back(std::move(w));
        }
        out["windows"] = std::move(windows);
        out["window_ms"] = m_window_ms;
        out["n_evals"] = evals;
        out["smoothing_clamped"] = tr.clamped;
        const std::size_t analyzed = tr.windows.size() * tr.window_samples;
        resynth = synthesize_trajectory(tr.smoothed_trajectory(fs), static_cast<double>(analyzed) / fs, task.synth);
        out["audio_mae"] = waveform_mae(task.target.slice(0, analyzed), resynth);
      } else {
        const MatchResult r = match_static(task);
        out = result_to_json(r);
        resynth = render_candidate(task, r.estimate);
      }
      if (!m_resynth.empty()) write_wav(m_resynth, resynth);
      if (m_out.empty()) {
        std::cout << out.dump(2) << '\n';
      } else {
        save_json(m_out, out);
      }
    } else if (*bench) {
      const ExperimentConfig cfg = ExperimentConfig::from_json(load_json(b_config));
      std::filesystem::create_directories(b_out);
      save_json(std::filesystem::path(b_out) / "config.json", cfg.to_json());
      const ExperimentReport report = run_experiment(cfg);
      write_report(report, std::filesystem::path(b_out) / "report.csv");
      render_plots(report, std::filesystem::path(b_out) / "plots");
      for (const auto& r : report.rows) {
        if (r.failed()) std::cerr << "failed: " << r.optimizer << '/' << r.representation << '/' << r.target_id << ": " << r.message << '\n';
      }
      if (!report.imported_scores.empty()) {
        std::map<std::string, std::pair<double, int>> agg;
        for (const auto& s : report.imported_scores) {
          auto& a = agg[std::string(to_string(s.metric))];
          a.first += s.value;
          a.second += 1;
        }
        for (const auto& [metric, a] : agg) std::cout << metric << " mean " << a.first / a.second << " over " << a.second << " clips\n";
      }
      std::cout << report.rows.size() << " rows, " << report.failed_count() << " failed\n";
      if (report.failed_count() > 0) return kFailedCells;
    } else if (*stoi_cmd) {
      std::printf("%.6f\n", stoi(read_wav(s_ref), read_wav(s_deg)).value);
    } else if (*report_cmd) {
      const auto report = read_report(r_csv);
      for (const auto& p : render_plots(report, r_plots)) std::cout << p.string() << '\n';
    }
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kIo;
  } catch (const WavIoError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kIo;
  } catch (const WavFormatError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kIo;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kIo;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  }
  return kOk;
}
