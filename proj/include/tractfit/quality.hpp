#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tractfit/audio_clip.hpp"

namespace tractfit {

enum class Metric { Stoi, Pesq, Peaq, Visqol };
enum class ScoreSource { Internal, Imported };

std::string_view to_string(Metric m);
// Case-insensitive; accepts "STOI", "PESQ", "PEAQ" and "VISQOL".
std::optional<Metric> metric_from_string(std::string_view name);

struct QualityScore {
  Metric metric = Metric::Stoi;
  double value = 0.0;
  ScoreSource source = ScoreSource::Internal;
  std::string clip_id;
};

// Valid range of a metric: [0, 1] for STOI, the MOS scale [1, 5] otherwise.
std::pair<double, double> metric_range(Metric m);

namespace stoi_config {
inline constexpr int kSampleRate = 10000;
inline constexpr std::size_t kFrame = 256;
inline constexpr std::size_t kFft = 512;
inline constexpr std::size_t kBands = 15;
inline constexpr double kMinFreq = 150.0;
inline constexpr std::size_t kSegment = 30;
inline constexpr double kBetaDb = -15.0;
inline constexpr double kDynamicRangeDb = 40.0;
}  // namespace stoi_config

// Polyphase rational resampler (up by p, down by q) with a Kaiser-windowed
// sinc anti-aliasing filter. Output length is ceil(n * p / q).
std::vector<double> resample_poly(std::span<const double> x, int up, int down);

// Classic short-time objective intelligibility. Throws std::invalid_argument
// on length or rate mismatch, an all-silent reference, or too little active
// speech for one 30-frame segment.
QualityScore stoi(const AudioClip& reference, const AudioClip& degraded);

// Reads `metric,clip_id,value` rows (a header line is optional). Throws
// std::runtime_error for unreadable files, unknown metrics, malformed rows
// and out-of-range values.
std::vector<QualityScore> import_scores(const std::filesystem::path& path);

}  // namespace tractfit
