#pragma once

// Experiment grid: dataset generation, benchmark runs, CSV reports and plots.

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "tractfit/features.hpp"
#include "tractfit/optimize.hpp"
#include "tractfit/params.hpp"
#include "tractfit/quality.hpp"

namespace tractfit {

enum class Experiment { SingleParam, AllParams, Noisy, TimeVarying, RealAudio };

std::string_view to_string(Experiment e);
std::optional<Experiment> experiment_from_string(std::string_view name);

struct ExperimentConfig {
  Experiment experiment = Experiment::AllParams;
  std::vector<Method> optimizers = {Method::GA, Method::PSO, Method::CMAES, Method::NM, Method::TRF};
  std::vector<ReprKind> representations = {ReprKind::Stft, ReprKind::MultiScale, ReprKind::Mel, ReprKind::Mfcc};
  // Free parameters visited by single_param.
  std::vector<Param> params = {Param::Pitch,          Param::Voiceness,         Param::TongueIndex,
                               Param::TongueDiameter, Param::LipsDiameter,      Param::ConstrictionIndex,
                               Param::ConstrictionDiameter, Param::ThroatDiameter};
  int repetitions = 20;
  std::uint64_t master_seed = 0;
  std::size_t max_evals = 2000;  // per row; windowed rows split it across windows
  double clip_duration_s = 0.5;
  std::vector<double> snr_grid = {40, 30, 20, 10, 5, 0};
  double window_ms = 100.0;
  std::filesystem::path target_dir;  // real_audio
  std::filesystem::path scores_csv;  // optional imported perceptual scores
  bool compute_stoi = true;
  unsigned threads = 1;  // grid workers; 0 uses every core

  // Named presets: "desk" (0.5 s clips, 2000 evaluations) and "full"
  // (1 s clips, 10000 evaluations).
  static ExperimentConfig profile(std::string_view name);

  // Throws std::invalid_argument with the offending field.
  void validate() const;

  // Unknown keys are rejected. A "profile" key selects the base preset.
  static ExperimentConfig from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
};

struct DatasetEntry {
  std::string id;
  std::filesystem::path wav;  // relative to the manifest directory
  TractParams params = TractParams::lower_bounds();
  std::uint64_t seed = 0;
};

struct DatasetManifest {
  std::vector<DatasetEntry> entries;

  nlohmann::json to_json() const;
  static DatasetManifest from_json(const nlohmann::json& j);
};

// Writes n Float32 WAVs with uniformly drawn controls plus manifest.json.
DatasetManifest generate_dataset(std::size_t n, std::uint64_t master_seed, const std::filesystem::path& out_dir,
                                 double duration_s = 1.0);

inline constexpr std::string_view kReportHeader =
    "experiment,optimizer,representation,repetition,target_id,err_pitch,err_voiceness,err_tongue_idx,"
    "err_tongue_diam,err_lips,err_constr_idx,err_constr_diam,err_throat,mean_norm_error,audio_mae,stoi,"
    "n_evals,elapsed_s,stop_reason";

// Stop-reason column values beyond the optimizer's own reasons.
inline constexpr std::string_view kFailedReason = "failed";
inline constexpr std::string_view kUnsupportedReason = "unsupported";

struct ReportRow {
  std::string experiment;  // noisy rows carry the SNR, e.g. "noisy_20dB"
  std::string optimizer;
  std::string representation;
  int repetition = 0;
  std::string target_id;
  std::array<std::optional<double>, kNumParams> param_errors{};
  std::optional<double> mean_norm_error;
  std::optional<double> audio_mae;
  std::optional<double> stoi;
  std::size_t n_evals = 0;
  double elapsed_s = 0.0;
  std::string stop_reason;
  std::string message;  // failure detail; not part of the CSV

  bool failed() const { return stop_reason == kFailedReason; }
};

struct ExperimentReport {
  std::vector<ReportRow> rows;
  std::vector<QualityScore> imported_scores;

  std::size_t failed_count() const;
};

// Runs the whole grid. Cell failures become rows; nothing is thrown for them.
ExperimentReport run_experiment(const ExperimentConfig& cfg);

// Parameters of repetition `rep`'s target, shared by every optimizer and
// representation. `stream` separates the two keyframes of a glide.
TractParams target_params(std::uint64_t master_seed, int rep, std::uint64_t stream = 0);
// Start point for repetition `rep`, in the free coordinates of `mask`.
Vector initial_point(std::uint64_t master_seed, int rep, std::size_t dims);
std::uint64_t optimizer_seed(std::uint64_t master_seed, Method m, ReprKind r, int rep);

void write_report(const ExperimentReport& report, const std::filesystem::path& out_path);
ExperimentReport read_report(const std::filesystem::path& csv_path);

// Writes SVG charts into out_dir and returns their paths. Charts without
// data (e.g. SNR curves for a clean experiment) are skipped.
std::vector<std::filesystem::path> render_plots(const ExperimentReport& report, const std::filesystem::path& out_dir);

}  // namespace tractfit
