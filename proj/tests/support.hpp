#pragma once

// Small signal-analysis oracles shared by the test binaries.

#include <cmath>
#include <cstddef>
#include <filesystem>
#include <numeric>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "tractfit/params.hpp"
#include "tractfit/rng.hpp"

namespace tf_test {

// Normalized autocorrelation of x at `lag`.
inline double autocorr(std::span<const double> x, std::size_t lag) {
  double num = 0.0, e0 = 0.0, e1 = 0.0;
  for (std::size_t i = 0; i + lag < x.size(); ++i) {
    num += x[i] * x[i + lag];
    e0 += x[i] * x[i];
    e1 += x[i + lag] * x[i + lag];
  }
  return num / (std::sqrt(e0 * e1) + 1e-300);
}

// Lag in [min_lag, max_lag] with the highest normalized autocorrelation.
inline std::size_t best_lag(std::span<const double> x, std::size_t min_lag, std::size_t max_lag) {
  std::size_t best = min_lag;
  double best_r = -2.0;
  for (std::size_t lag = min_lag; lag <= max_lag; ++lag) {
    const double r = autocorr(x, lag);
    if (r > best_r) {
      best_r = r;
      best = lag;
    }
  }
  return best;
}

// Autocorrelation f0 estimate with parabolic refinement of the peak lag.
inline double estimate_f0(std::span<const double> x, double fs, double fmin = 60.0, double fmax = 400.0) {
  const auto lo = static_cast<std::size_t>(std::floor(fs / fmax));
  const auto hi = static_cast<std::size_t>(std::ceil(fs / fmin));
  // Prefer the shortest lag whose correlation is close to the global best so
  // that period multiples are not chosen.
  std::vector<double> r(hi + 2, 0.0);
  double top = -2.0;
  for (std::size_t lag = lo - 1; lag <= hi + 1; ++lag) {
    r[lag] = autocorr(x, lag);
    if (lag >= lo && lag <= hi) top = std::max(top, r[lag]);
  }
  std::size_t pick = hi;
  for (std::size_t lag = lo; lag <= hi; ++lag) {
    if (r[lag] >= 0.9 * top && r[lag] >= r[lag - 1] && r[lag] >= r[lag + 1]) {
      pick = lag;
      break;
    }
  }
  const double a = r[pick - 1], b = r[pick], c = r[pick + 1];
  const double denom = a - 2.0 * b + c;
  const double shift = denom != 0.0 ? 0.5 * (a - c) / denom : 0.0;
  return fs / (static_cast<double>(pick) + shift);
}

inline tractfit::TractParams random_params(std::uint64_t seed, std::uint64_t stream = 0) {
  tractfit::CounterRng rng(seed, stream);
  tractfit::ParamArray u{};
  for (auto& v : u) v = rng.uniform();
  return tractfit::denormalize(tractfit::NormalizedParams(u));
}

inline double rms(std::span<const double> x) {
  double s = 0.0;
  for (double v : x) s += v * v;
  return std::sqrt(s / static_cast<double>(x.size()));
}

// Fresh scratch directory under the system temp dir.
inline std::filesystem::path temp_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("tractfit_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace tf_test
