#include "tractfit/features.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <stdexcept>
#include <string>

namespace tractfit {

namespace {

constexpr double kPi = std::numbers::pi;

// FFTW plans are created once per size under a lock; executing a plan on
// caller-owned buffers is thread-safe.
class RealFft {
 public:
  explicit RealFft(std::size_t n) : n_(n) {
    auto* in = fftw_alloc_real(n);
    auto* out = fftw_alloc_complex(n / 2 + 1);
    plan_ = fftw_plan_dft_r2c_1d(static_cast<int>(n), in, out, FFTW_ESTIMATE);
    fftw_free(in);
    fftw_free(out);
    if (plan_ == nullptr) throw std::runtime_error("FFTW plan creation failed");
  }
  RealFft(const RealFft&) = delete;
  RealFft& operator=(const RealFft&) = delete;
  ~RealFft() { fftw_destroy_plan(plan_); }

  void execute(double* in, fftw_complex* out) const { fftw_execute_dft_r2c(plan_, in, out); }
  std::size_t size() const { return n_; }

 private:
  std::size_t n_;
  fftw_plan plan_;
};

const RealFft& fft_for(std::size_t n) {
  static std::mutex mu;
  static std::map<std::size_t, std::unique_ptr<RealFft>> cache;
  std::lock_guard lock(mu);
  auto& slot = cache[n];
  if (!slot) slot = std::make_unique<RealFft>(n);
  return *slot;
}

const std::vector<double>& hann(std::size_t n) {
  static std::mutex mu;
  static std::map<std::size_t, std::vector<double>> cache;
  std::lock_guard lock(mu);
  auto& w = cache[n];
  if (w.empty()) {
    w.resize(n);
    for (std::size_t i = 0; i < n; ++i) w[i] = 0.5 - 0.5 * std::cos(2.0 * kPi * i / n);  // periodic
  }
  return w;
}

struct FftBuffers {
  double* in = nullptr;
  fftw_complex* out = nullptr;
  std::size_t n = 0;

  FftBuffers() = default;
  FftBuffers(const FftBuffers&) = delete;
  FftBuffers& operator=(const FftBuffers&) = delete;
  ~FftBuffers() { release(); }

  void ensure(std::size_t size) {
    if (size == n) return;
    release();
    in = fftw_alloc_real(size);
    out = fftw_alloc_complex(size / 2 + 1);
    n = size;
  }
  void release() {
    if (in) fftw_free(in);
    if (out) fftw_free(out);
    in = nullptr;
    out = nullptr;
    n = 0;
  }
};

struct MelTables {
  std::vector<std::size_t> first;  // first nonzero bin per band
  std::vector<std::vector<double>> weights;
};

const MelTables& mel_tables(int sample_rate_hz) {
  static std::mutex mu;
  static std::map<int, MelTables> cache;
  std::lock_guard lock(mu);
  auto it = cache.find(sample_rate_hz);
  if (it != cache.end()) return it->second;
  MelTables t;
  for (const auto& row : mel_filterbank(sample_rate_hz, kStftWindow)) {
    std::size_t lo = 0;
    while (lo < row.size() && row[lo] == 0.0) ++lo;
    std::size_t hi = row.size();
    while (hi > lo && row[hi - 1] == 0.0) --hi;
    t.first.push_back(lo);
    t.weights.emplace_back(row.begin() + static_cast<std::ptrdiff_t>(lo),
                           row.begin() + static_cast<std::ptrdiff_t>(hi));
  }
  return cache.emplace(sample_rate_hz, std::move(t)).first->second;
}

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

}  // namespace

std::string_view to_string(ReprKind kind) {
  switch (kind) {
    case ReprKind::Stft: return "stft";
    case ReprKind::MultiScale: return "multiscale";
    case ReprKind::Mel: return "mel";
    case ReprKind::Mfcc: return "mfcc";
  }
  return "?";
}

std::optional<ReprKind> repr_from_string(std::string_view name) {
  for (auto k : {ReprKind::Stft, ReprKind::MultiScale, ReprKind::Mel, ReprKind::Mfcc}) {
    if (to_string(k) == name) return k;
  }
  return std::nullopt;
}

FeatureMatrix magnitude_spectrogram(std::span<const double> samples, std::size_t window, std::size_t hop) {
  if (window == 0 || hop == 0) throw std::invalid_argument("window and hop must be positive");
  if (samples.size() < window) {
    throw std::invalid_argument("clip of " + std::to_string(samples.size()) +
                                " samples is shorter than one window of " + std::to_string(window));
  }
  const auto& fft = fft_for(window);
  const auto& win = hann(window);
  thread_local FftBuffers buf;
  buf.ensure(window);

  FeatureMatrix m;
  m.frames = frame_count(samples.size(), window, hop);
  m.bins = window / 2 + 1;
  m.values.resize(m.frames * m.bins);
  for (std::size_t f = 0; f < m.frames; ++f) {
    const double* src = samples.data() + f * hop;
    for (std::size_t i = 0; i < window; ++i) buf.in[i] = src[i] * win[i];
    fft.execute(buf.in, buf.out);
    double* dst = m.values.data() + f * m.bins;
    for (std::size_t k = 0; k < m.bins; ++k) dst[k] = std::sqrt(buf.out[k][0] * buf.out[k][0] + buf.out[k][1] * buf.out[k][1]);
  }
  return m;
}

FeatureMatrix stft_mag(const AudioClip& clip) {
  auto m = magnitude_spectrogram(clip.samples, kStftWindow, kStftHop);
  m.kind = ReprKind::Stft;
  return m;
}

std::vector<FeatureMatrix> multiscale_mag(const AudioClip& clip) {
  if (clip.size() < kStftWindow) {
    throw std::invalid_argument("clip shorter than the largest multiscale window");
  }
  std::vector<FeatureMatrix> out;
  for (std::size_t w : kMultiScaleWindows) {
    out.push_back(magnitude_spectrogram(clip.samples, w, w / 4));
    out.back().kind = ReprKind::MultiScale;
  }
  return out;
}

std::vector<std::vector<double>> mel_filterbank(int sample_rate_hz, std::size_t fft_size, std::size_t bands,
                                                double max_hz) {
  const std::size_t bins = fft_size / 2 + 1;
  const double mel_max = hz_to_mel(max_hz);
  std::vector<double> edges(bands + 2);
  for (std::size_t i = 0; i < edges.size(); ++i) {
    edges[i] = mel_to_hz(mel_max * static_cast<double>(i) / static_cast<double>(bands + 1));
  }
  edges.back() = max_hz;
  std::vector<std::vector<double>> fb(bands, std::vector<double>(bins, 0.0));
  for (std::size_t m = 0; m < bands; ++m) {
    const double lo = edges[m], centre = edges[m + 1], hi = edges[m + 2];
    for (std::size_t k = 0; k < bins; ++k) {
      const double f = static_cast<double>(k) * sample_rate_hz / static_cast<double>(fft_size);
      if (f > lo && f <= centre) {
        fb[m][k] = (f - lo) / (centre - lo);
      } else if (f > centre && f < hi) {
        fb[m][k] = (hi - f) / (hi - centre);
      }
    }
  }
  return fb;
}

FeatureMatrix mel_spec(const AudioClip& clip) {
  const FeatureMatrix spec = stft_mag(clip);
  const auto& tables = mel_tables(clip.sample_rate_hz);
  FeatureMatrix m;
  m.kind = ReprKind::Mel;
  m.frames = spec.frames;
  m.bins = kMelBands;
  m.values.assign(m.frames * m.bins, 0.0);
  for (std::size_t f = 0; f < spec.frames; ++f) {
    const auto row = spec.row(f);
    for (std::size_t b = 0; b < kMelBands; ++b) {
      const auto& w = tables.weights[b];
      const std::size_t k0 = tables.first[b];
      double acc = 0.0;
      for (std::size_t j = 0; j < w.size(); ++j) acc += w[j] * row[k0 + j];
      m.values[f * m.bins + b] = acc;
    }
  }
  return m;
}

std::vector<double> dct2_orthonormal(std::span<const double> x, std::size_t keep) {
  const std::size_t n = x.size();
  keep = std::min(keep, n);
  std::vector<double> out(keep, 0.0);
  for (std::size_t k = 0; k < keep; ++k) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += x[i] * std::cos(kPi * k * (2.0 * i + 1.0) / (2.0 * n));
    out[k] = acc * (k == 0 ? std::sqrt(1.0 / n) : std::sqrt(2.0 / n));
  }
  return out;
}

FeatureMatrix mfcc(const AudioClip& clip) {
  const FeatureMatrix mel = mel_spec(clip);
  static const std::vector<double> basis = [] {
    std::vector<double> b(kMfccCoefficients * kMelBands);
    for (std::size_t k = 0; k < kMfccCoefficients; ++k) {
      const double s = k == 0 ? std::sqrt(1.0 / kMelBands) : std::sqrt(2.0 / kMelBands);
      for (std::size_t i = 0; i < kMelBands; ++i) {
        b[k * kMelBands + i] = s * std::cos(kPi * k * (2.0 * i + 1.0) / (2.0 * kMelBands));
      }
    }
    return b;
  }();
  FeatureMatrix m;
  m.kind = ReprKind::Mfcc;
  m.frames = mel.frames;
  m.bins = kMfccCoefficients;
  m.values.resize(m.frames * m.bins);
  std::vector<double> logmel(kMelBands);
  for (std::size_t f = 0; f < mel.frames; ++f) {
    const auto row = mel.row(f);
    for (std::size_t i = 0; i < kMelBands; ++i) logmel[i] = std::log(std::max(row[i], kLogFloor));
    for (std::size_t k = 0; k < kMfccCoefficients; ++k) {
      double acc = 0.0;
      for (std::size_t i = 0; i < kMelBands; ++i) acc += basis[k * kMelBands + i] * logmel[i];
      m.values[f * m.bins + k] = acc;
    }
  }
  return m;
}

std::vector<double> extract(ReprKind kind, const AudioClip& clip) {
  switch (kind) {
    case ReprKind::Stft: return stft_mag(clip).values;
    case ReprKind::Mel: return mel_spec(clip).values;
    case ReprKind::Mfcc: return mfcc(clip).values;
    case ReprKind::MultiScale: {
      std::vector<double> out;
      for (auto& m : multiscale_mag(clip)) out.insert(out.end(), m.values.begin(), m.values.end());
      return out;
    }
  }
  throw std::invalid_argument("unknown representation");
}

double mae(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw std::invalid_argument("feature length mismatch: " + std::to_string(a.size()) + " vs " +
                                std::to_string(b.size()));
  }
  if (a.empty()) return 0.0;
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) sum += std::abs(a[i] - b[i]);
  return sum / static_cast<double>(a.size());
}

}  // namespace tractfit
