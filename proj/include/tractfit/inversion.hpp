#pragma once

// Sound matching: recover synthesizer controls from a target clip by
// minimizing a feature-space MAE with one of the optimizers.

#include <array>
#include <optional>
#include <span>
#include <vector>

#include "tractfit/audio_clip.hpp"
#include "tractfit/features.hpp"
#include "tractfit/optimize.hpp"
#include "tractfit/params.hpp"
#include "tractfit/vocal_tract.hpp"

namespace tractfit {

using ParamMask = std::array<bool, kNumParams>;

inline constexpr ParamMask kAllFree = {true, true, true, true, true, true, true, true};

// Mask with only `p` free.
ParamMask single_free(Param p);

// Mid-range controls, the default for fixed values.
TractParams mid_params();

struct MatchTask {
  AudioClip target;
  ReprKind repr = ReprKind::MultiScale;
  // Method, seed and hyperparameters. `initial`, when set, is given in free
  // coordinates: the normalized values of the free parameters, in order.
  OptimizerConfig optimizer;
  ParamMask free_mask = kAllFree;
  TractParams fixed_values = mid_params();
  StopCriteria stop;
  SynthConfig synth;
  // Audio synthesized and discarded before each candidate is compared, so a
  // clip cut from the middle of a sound is not matched against an onset.
  double preroll_s = 0.0;

  // Throws std::invalid_argument for an empty mask, a non-48 kHz target or a
  // target shorter than the largest analysis window.
  void validate() const;
  std::size_t free_count() const;
};

struct ParamErrors {
  std::array<double, kNumParams> per_param{};
  double mean = 0.0;  // over the free parameters only
};

struct MatchResult {
  OptimizationResult optimization;
  TractParams estimate = mid_params();
  double audio_mae = 0.0;
  std::optional<ParamErrors> errors;  // present when ground truth was given
};

struct TrajectoryResult {
  std::vector<MatchResult> windows;
  std::size_t window_samples = 0;
  std::vector<NormalizedParams> raw;
  std::vector<NormalizedParams> smoothed;
  bool clamped = false;  // smoothing overshot [0, 1] somewhere

  // Start sample of window i.
  std::size_t window_begin(std::size_t i) const { return i * window_samples; }
  // Keyframes at window centers built from the smoothed values.
  ParamTrajectory smoothed_trajectory(int sample_rate_hz) const;
};

struct WindowedOptions {
  double window_ms = 100.0;
  double preroll_ms = 50.0;
  int smooth_points = 9;
  int smooth_order = 2;
};

// Full parameter set from free coordinates and the task's fixed values.
TractParams merge_free(std::span<const double> x, const MatchTask& task);
Vector free_coordinates(const TractParams& p, const ParamMask& mask);

// Candidate audio for `p`, aligned with the task's target.
AudioClip render_candidate(const MatchTask& task, const TractParams& p);

// Feature-space MAE objective over the free coordinates. Target features are
// computed once. The residual (target minus candidate features) is attached
// for least-squares solvers; its mean absolute value equals the cost.
Objective make_objective(const MatchTask& task);

ParamErrors param_error(const TractParams& truth, const TractParams& estimate, const ParamMask& mask = kAllFree);

// Runs the configured optimizer on any mask.
MatchResult match(const MatchTask& task, const std::optional<TractParams>& truth = std::nullopt);
// All eight parameters free.
MatchResult match_static(const MatchTask& task, const std::optional<TractParams>& truth = std::nullopt);
// Exactly one parameter free; CMA-ES is rejected.
MatchResult match_single_param(const MatchTask& task, const std::optional<TractParams>& truth = std::nullopt);

// Non-overlapping windows matched in order, each warm-started from the
// previous solution. A trailing partial window is dropped.
TrajectoryResult match_windowed(const MatchTask& task, const WindowedOptions& opt = {});

// Savitzky-Golay smoothing with polynomial extrapolation at the edges. Series
// shorter than the window are returned unchanged.
std::vector<double> savgol_filter(std::span<const double> series, int window_points = 9, int polyorder = 2);
// savgol_filter followed by clamping to [0, 1]; sets *clamped when any value moved.
std::vector<double> savgol_smooth(std::span<const double> series, int window_points = 9, int polyorder = 2,
                                  bool* clamped = nullptr);

}  // namespace tractfit
