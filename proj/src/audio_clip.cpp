#include "tractfit/audio_clip.hpp"

#include <cmath>
#include <stdexcept>

namespace tractfit {

AudioClip AudioClip::slice(std::size_t begin, std::size_t count) const {
  if (begin > samples.size() || count > samples.size() - begin) {
    throw std::out_of_range("slice outside clip");
  }
  AudioClip out;
  out.sample_rate_hz = sample_rate_hz;
  out.samples.assign(samples.begin() + static_cast<std::ptrdiff_t>(begin),
                     samples.begin() + static_cast<std::ptrdiff_t>(begin + count));
  return out;
}

double waveform_mae(const AudioClip& a, const AudioClip& b) {
  if (a.size() != b.size()) throw std::invalid_argument("waveform length mismatch");
  if (a.size() == 0) return 0.0;
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) sum += std::abs(a.samples[i] - b.samples[i]);
  return sum / static_cast<double>(a.size());
}

void require_finite(const AudioClip& clip) {
  for (double v : clip.samples) {
    if (!std::isfinite(v)) throw std::invalid_argument("clip contains non-finite samples");
  }
}

}  // namespace tractfit
