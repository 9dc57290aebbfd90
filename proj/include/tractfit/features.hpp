#pragma once

// Spectral representations used as matching objectives, and the MAE loss.

#include <cstddef>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "tractfit/audio_clip.hpp"

namespace tractfit {

enum class ReprKind { Stft, MultiScale, Mel, Mfcc };

inline constexpr std::size_t kStftWindow = 1024;
inline constexpr std::size_t kStftHop = 512;
inline constexpr std::size_t kMultiScaleWindows[] = {64, 128, 256, 512, 1024};
inline constexpr std::size_t kMelBands = 128;
inline constexpr double kMelMaxHz = 8000.0;
inline constexpr std::size_t kMfccCoefficients = 20;
inline constexpr double kLogFloor = 1e-10;

std::string_view to_string(ReprKind kind);
std::optional<ReprKind> repr_from_string(std::string_view name);

// Row-major frames x bins.
struct FeatureMatrix {
  std::size_t frames = 0;
  std::size_t bins = 0;
  std::vector<double> values;
  ReprKind kind = ReprKind::Stft;

  double at(std::size_t frame, std::size_t bin) const { return values[frame * bins + bin]; }
  std::span<const double> row(std::size_t frame) const {
    return std::span<const double>(values).subspan(frame * bins, bins);
  }
};

// floor((n - window) / hop) + 1; zero when the clip is shorter than a window.
constexpr std::size_t frame_count(std::size_t n, std::size_t window, std::size_t hop) {
  return n < window ? 0 : (n - window) / hop + 1;
}

// Hann-windowed magnitude spectrogram with arbitrary power-of-two window.
// Trailing partial frames are dropped. Throws std::invalid_argument if the
// clip is shorter than one window.
FeatureMatrix magnitude_spectrogram(std::span<const double> samples, std::size_t window, std::size_t hop);

FeatureMatrix stft_mag(const AudioClip& clip);
std::vector<FeatureMatrix> multiscale_mag(const AudioClip& clip);
FeatureMatrix mel_spec(const AudioClip& clip);
FeatureMatrix mfcc(const AudioClip& clip);

// Triangular mel filterbank (HTK mel scale, 0 Hz to kMelMaxHz), one row per
// band over the rfft bins of an `fft_size` transform.
std::vector<std::vector<double>> mel_filterbank(int sample_rate_hz, std::size_t fft_size,
                                                std::size_t bands = kMelBands, double max_hz = kMelMaxHz);

// Orthonormal DCT-II of `x`, first `keep` coefficients.
std::vector<double> dct2_orthonormal(std::span<const double> x, std::size_t keep);

// Flattened representation; MultiScale concatenates the five scales.
std::vector<double> extract(ReprKind kind, const AudioClip& clip);

// Mean absolute error; throws std::invalid_argument on a length mismatch.
double mae(std::span<const double> a, std::span<const double> b);

}  // namespace tractfit
