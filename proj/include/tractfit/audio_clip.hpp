#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace tractfit {

inline constexpr int kPipelineSampleRate = 48000;

// Mono sample buffer. Samples are expected to be finite.
struct AudioClip {
  std::vector<double> samples;
  int sample_rate_hz = kPipelineSampleRate;

  std::size_t size() const { return samples.size(); }
  double duration_s() const { return static_cast<double>(samples.size()) / sample_rate_hz; }
  std::span<const double> view() const { return samples; }

  // Sub-range [begin, begin + count) as a new clip.
  AudioClip slice(std::size_t begin, std::size_t count) const;
};

// Mean absolute difference of two equal-length waveforms.
double waveform_mae(const AudioClip& a, const AudioClip& b);

// Throws std::invalid_argument if any sample is NaN or infinite.
void require_finite(const AudioClip& clip);

}  // namespace tractfit
