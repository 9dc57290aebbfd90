#include "tractfit/inversion.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

#include "tractfit/rng.hpp"

namespace tractfit {

ParamMask single_free(Param p) {
  ParamMask m{};
  m[index_of(p)] = true;
  return m;
}

TractParams mid_params() {
  ParamArray half;
  half.fill(0.5);
  return denormalize(NormalizedParams(half));
}

std::size_t MatchTask::free_count() const {
  return static_cast<std::size_t>(std::count(free_mask.begin(), free_mask.end(), true));
}

void MatchTask::validate() const {
  if (free_count() == 0) throw std::invalid_argument("match task has no free parameters");
  if (target.sample_rate_hz != kPipelineSampleRate) {
    throw std::invalid_argument("target sample rate must be 48000 Hz, got " + std::to_string(target.sample_rate_hz));
  }
  if (target.size() < kStftWindow) throw std::invalid_argument("target is shorter than one analysis window");
  if (preroll_s < 0.0) throw std::invalid_argument("preroll must be non-negative");
  require_finite(target);
  stop.validate();
  synth.validate();
}

TractParams merge_free(std::span<const double> x, const MatchTask& task) {
  if (x.size() != task.free_count()) throw std::invalid_argument("free coordinate count mismatch");
  ParamArray full = normalize(task.fixed_values).values();
  std::size_t k = 0;
  for (std::size_t i = 0; i < kNumParams; ++i) {
    if (task.free_mask[i]) full[i] = x[k++];
  }
  // Fixed values pass through untouched; only free ones are denormalized.
  const TractParams merged = denormalize(clamp_normalized(full));
  ParamArray out = task.fixed_values.values();
  for (std::size_t i = 0; i < kNumParams; ++i) {
    if (task.free_mask[i]) out[i] = merged.values()[i];
  }
  return TractParams(out);
}

Vector free_coordinates(const TractParams& p, const ParamMask& mask) {
  const auto n = normalize(p);
  Vector x;
  for (std::size_t i = 0; i < kNumParams; ++i) {
    if (mask[i]) x.push_back(n[i]);
  }
  return x;
}

AudioClip render_candidate(const MatchTask& task, const TractParams& p) {
  const std::size_t n = task.target.size();
  const int fs = task.target.sample_rate_hz;
  const std::size_t pre = static_cast<std::size_t>(std::llround(task.preroll_s * fs));
  AudioClip full = synthesize_static(p, static_cast<double>(n + pre) / fs, task.synth);
  if (full.size() != n + pre) throw std::logic_error("synthesized length mismatch");
  return pre == 0 ? full : full.slice(pre, n);
}

Objective make_objective(const MatchTask& task) {
  task.validate();
  auto shared = std::make_shared<const MatchTask>(task);
  auto target_features = std::make_shared<const std::vector<double>>(extract(task.repr, task.target));

  Objective obj;
  obj.cost = [shared, target_features](std::span<const double> x) {
    const AudioClip cand = render_candidate(*shared, merge_free(x, *shared));
    return mae(*target_features, extract(shared->repr, cand));
  };
  obj.residual = [shared, target_features](std::span<const double> x) {
    const AudioClip cand = render_candidate(*shared, merge_free(x, *shared));
    Vector r = extract(shared->repr, cand);
    if (r.size() != target_features->size()) throw std::logic_error("feature length mismatch");
    for (std::size_t i = 0; i < r.size(); ++i) r[i] = (*target_features)[i] - r[i];
    return r;
  };
  return obj;
}

ParamErrors param_error(const TractParams& truth, const TractParams& estimate, const ParamMask& mask) {
  const auto t = normalize(truth);
  const auto e = normalize(estimate);
  ParamErrors out;
  std::size_t n_free = 0;
  double sum = 0.0;
  for (std::size_t i = 0; i < kNumParams; ++i) {
    out.per_param[i] = std::abs(t[i] - e[i]);
    if (mask[i]) {
      sum += out.per_param[i];
      ++n_free;
    }
  }
  out.mean = n_free ? sum / static_cast<double>(n_free) : 0.0;
  return out;
}

MatchResult match(const MatchTask& task, const std::optional<TractParams>& truth) {
  const Objective objective = make_objective(task);
  const std::size_t d = task.free_count();
  const Bounds bounds = Bounds::unit(d);
  MatchResult out;
  out.optimization = optimize(objective, bounds, task.optimizer, task.stop);
  out.estimate = merge_free(out.optimization.best_x, task);
  out.audio_mae = waveform_mae(task.target, render_candidate(task, out.estimate));
  if (truth) out.errors = param_error(*truth, out.estimate, task.free_mask);
  return out;
}

MatchResult match_static(const MatchTask& task, const std::optional<TractParams>& truth) {
  if (task.free_count() != kNumParams) throw std::invalid_argument("static matching requires all parameters free");
  return match(task, truth);
}

MatchResult match_single_param(const MatchTask& task, const std::optional<TractParams>& truth) {
  if (task.free_count() != 1) throw std::invalid_argument("single-parameter matching requires exactly one free parameter");
  if (task.optimizer.method == Method::CMAES) {
    throw std::invalid_argument("CMA-ES does not support single-parameter problems");
  }
  return match(task, truth);
}

std::vector<double> savgol_filter(std::span<const double> series, int window_points, int polyorder) {
  if (window_points < 1 || window_points % 2 == 0) throw std::invalid_argument("window_points must be odd and positive");
  if (polyorder < 0 || polyorder >= window_points) throw std::invalid_argument("polyorder must be in [0, window_points)");
  const auto n = series.size();
  const auto w = static_cast<std::size_t>(window_points);
  if (n < w) return {series.begin(), series.end()};

  // Least-squares projector from window samples to polynomial coefficients,
  // with t centered on the window.
  const int half = window_points / 2;
  Eigen::MatrixXd V(window_points, polyorder + 1);
  for (int i = 0; i < window_points; ++i) {
    for (int k = 0; k <= polyorder; ++k) V(i, k) = std::pow(static_cast<double>(i - half), k);
  }
  const Eigen::MatrixXd P = V.completeOrthogonalDecomposition().pseudoInverse();

  std::vector<double> out(n);
  auto fit = [&](std::size_t begin) {
    const Eigen::Map<const Eigen::VectorXd> y(series.data() + begin, window_points);
    return Eigen::VectorXd(P * y);
  };
  auto eval = [&](const Eigen::VectorXd& c, double t) {
    double v = 0.0;
    for (int k = polyorder; k >= 0; --k) v = v * t + c[k];
    return v;
  };

  const Eigen::VectorXd head = fit(0);
  for (int i = 0; i < half; ++i) out[static_cast<std::size_t>(i)] = eval(head, i - half);
  const Eigen::RowVectorXd center = P.row(0);
  for (std::size_t i = static_cast<std::size_t>(half); i + static_cast<std::size_t>(half) < n; ++i) {
    double v = 0.0;
    for (int j = 0; j < window_points; ++j) v += center[j] * series[i - static_cast<std::size_t>(half) + static_cast<std::size_t>(j)];
    out[i] = v;
  }
  const Eigen::VectorXd tail = fit(n - w);
  for (int i = 1; i <= half; ++i) out[n - static_cast<std::size_t>(half) - 1 + static_cast<std::size_t>(i)] = eval(tail, i);
  return out;
}

std::vector<double> savgol_smooth(std::span<const double> series, int window_points, int polyorder, bool* clamped) {
  auto out = savgol_filter(series, window_points, polyorder);
  for (double& v : out) {
    const double c = std::clamp(v, 0.0, 1.0);
    if (c != v && clamped) *clamped = true;
    v = c;
  }
  return out;
}

ParamTrajectory TrajectoryResult::smoothed_trajectory(int sample_rate_hz) const {
  if (smoothed.empty()) throw std::logic_error("trajectory has no windows");
  const double win_s = static_cast<double>(window_samples) / sample_rate_hz;
  std::vector<Keyframe> keys;
  keys.push_back({0.0, denormalize(smoothed.front())});
  for (std::size_t i = 0; i < smoothed.size(); ++i) keys.push_back({(i + 0.5) * win_s, denormalize(smoothed[i])});
  return ParamTrajectory(std::move(keys));
}

TrajectoryResult match_windowed(const MatchTask& task, const WindowedOptions& opt) {
  if (!(opt.window_ms > 0.0)) throw std::invalid_argument("window length must be positive");
  const int fs = task.target.sample_rate_hz;
  TrajectoryResult out;
  out.window_samples = static_cast<std::size_t>(std::llround(opt.window_ms * 1e-3 * fs));
  const std::size_t n_windows = task.target.size() / out.window_samples;
  if (n_windows == 0) throw std::invalid_argument("target is shorter than one window");

  std::optional<Vector> warm = task.optimizer.initial;
  for (std::size_t i = 0; i < n_windows; ++i) {
    MatchTask sub = task;
    sub.target = task.target.slice(out.window_begin(i), out.window_samples);
    sub.preroll_s = opt.preroll_ms * 1e-3;
    sub.synth.seed = derive_seed(task.synth.seed, {hash_string("window"), i});
    sub.optimizer.seed = derive_seed(task.optimizer.seed, {hash_string("window"), i});
    sub.optimizer.initial = warm;
    MatchResult r = match(sub);
    warm = free_coordinates(r.estimate, task.free_mask);
    out.raw.push_back(normalize(r.estimate));
    out.windows.push_back(std::move(r));
  }

  // Smooth each free parameter independently; fixed ones stay exact.
  std::vector<ParamArray> smoothed(n_windows);
  for (std::size_t i = 0; i < n_windows; ++i) smoothed[i] = out.raw[i].values();
  for (std::size_t p = 0; p < kNumParams; ++p) {
    if (!task.free_mask[p]) continue;
    std::vector<double> series(n_windows);
    for (std::size_t i = 0; i < n_windows; ++i) series[i] = out.raw[i][p];
    const auto s = savgol_smooth(series, opt.smooth_points, opt.smooth_order, &out.clamped);
    for (std::size_t i = 0; i < n_windows; ++i) smoothed[i][p] = s[i];
  }
  for (const auto& a : smoothed) out.smoothed.emplace_back(a);
  return out;
}

}  // namespace tractfit
