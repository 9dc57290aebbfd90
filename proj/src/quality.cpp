#include "tractfit/quality.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace tractfit {

namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();

std::string upper(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return out;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

// Hann window of length n without its zero endpoints.
std::vector<double> inner_hann(std::size_t n) {
  std::vector<double> w(n);
  for (std::size_t i = 0; i < n; ++i) {
    w[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i + 1) / static_cast<double>(n + 1));
  }
  return w;
}

struct Frames {
  std::vector<std::vector<double>> x, y;
};

// Drops frames whose reference energy is more than the dynamic range below
// the loudest frame, then overlap-adds the survivors.
std::pair<std::vector<double>, std::vector<double>> remove_silent_frames(const std::vector<double>& x,
                                                                         const std::vector<double>& y) {
  using namespace stoi_config;
  const std::size_t hop = kFrame / 2;
  const auto w = inner_hann(kFrame);
  Frames kept;
  std::vector<double> energy;
  Frames all;
  for (std::size_t i = 0; i + kFrame < x.size(); i += hop) {
    std::vector<double> fx(kFrame), fy(kFrame);
    double e = 0.0;
    for (std::size_t k = 0; k < kFrame; ++k) {
      fx[k] = w[k] * x[i + k];
      fy[k] = w[k] * y[i + k];
      e += fx[k] * fx[k];
    }
    energy.push_back(20.0 * std::log10(std::sqrt(e) + kEps));
    all.x.push_back(std::move(fx));
    all.y.push_back(std::move(fy));
  }
  if (energy.empty()) return {};
  const double top = *std::max_element(energy.begin(), energy.end());
  for (std::size_t f = 0; f < energy.size(); ++f) {
    if (top - kDynamicRangeDb - energy[f] < 0.0) {
      kept.x.push_back(std::move(all.x[f]));
      kept.y.push_back(std::move(all.y[f]));
    }
  }
  if (kept.x.empty()) return {};
  const std::size_t len = (kept.x.size() - 1) * hop + kFrame;
  std::vector<double> ox(len, 0.0), oy(len, 0.0);
  for (std::size_t f = 0; f < kept.x.size(); ++f) {
    for (std::size_t k = 0; k < kFrame; ++k) {
      ox[f * hop + k] += kept.x[f][k];
      oy[f * hop + k] += kept.y[f][k];
    }
  }
  return {ox, oy};
}

// Power spectra of Hann-windowed, zero-padded frames: frames x (kFft/2 + 1).
std::vector<std::vector<double>> power_frames(const std::vector<double>& x) {
  using namespace stoi_config;
  const std::size_t hop = kFrame / 2;
  const std::size_t bins = kFft / 2 + 1;
  static const auto w = inner_hann(kFrame);
  static const auto table = [] {
    std::vector<double> c(bins * kFrame), s(bins * kFrame);
    for (std::size_t b = 0; b < bins; ++b) {
      for (std::size_t k = 0; k < kFrame; ++k) {
        const double ph = 2.0 * std::numbers::pi * static_cast<double>(b * k % kFft) / static_cast<double>(kFft);
        c[b * kFrame + k] = std::cos(ph);
        s[b * kFrame + k] = std::sin(ph);
      }
    }
    return std::pair{c, s};
  }();
  std::vector<std::vector<double>> out;
  std::vector<double> frame(kFrame);
  for (std::size_t i = 0; i + kFrame < x.size(); i += hop) {
    for (std::size_t k = 0; k < kFrame; ++k) frame[k] = w[k] * x[i + k];
    std::vector<double> p(bins);
    for (std::size_t b = 0; b < bins; ++b) {
      double re = 0.0, im = 0.0;
      const double* cr = &table.first[b * kFrame];
      const double* si = &table.second[b * kFrame];
      for (std::size_t k = 0; k < kFrame; ++k) {
        re += frame[k] * cr[k];
        im -= frame[k] * si[k];
      }
      p[b] = re * re + im * im;
    }
    out.push_back(std::move(p));
  }
  return out;
}

// One-third octave band edges as FFT bin ranges [lo, hi).
std::vector<std::pair<std::size_t, std::size_t>> third_octave_bands() {
  using namespace stoi_config;
  const std::size_t bins = kFft / 2 + 1;
  auto nearest = [&](double hz) {
    std::size_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t b = 0; b < bins; ++b) {
      const double f = static_cast<double>(b) * kSampleRate / static_cast<double>(kFft);
      const double d = (f - hz) * (f - hz);
      if (d < best_d) {
        best_d = d;
        best = b;
      }
    }
    return best;
  };
  std::vector<std::pair<std::size_t, std::size_t>> out;
  for (std::size_t k = 0; k < kBands; ++k) {
    const double kk = static_cast<double>(k);
    out.emplace_back(nearest(kMinFreq * std::pow(2.0, (2.0 * kk - 1.0) / 6.0)),
                     nearest(kMinFreq * std::pow(2.0, (2.0 * kk + 1.0) / 6.0)));
  }
  return out;
}

// Band envelopes: bands x frames.
std::vector<std::vector<double>> band_envelopes(const std::vector<std::vector<double>>& power) {
  static const auto bands = third_octave_bands();
  std::vector<std::vector<double>> env(bands.size(), std::vector<double>(power.size()));
  for (std::size_t j = 0; j < bands.size(); ++j) {
    for (std::size_t m = 0; m < power.size(); ++m) {
      double s = 0.0;
      for (std::size_t b = bands[j].first; b < bands[j].second; ++b) s += power[m][b];
      env[j][m] = std::sqrt(s);
    }
  }
  return env;
}

}  // namespace

std::string_view to_string(Metric m) {
  switch (m) {
    case Metric::Stoi: return "STOI";
    case Metric::Pesq: return "PESQ";
    case Metric::Peaq: return "PEAQ";
    case Metric::Visqol: return "VISQOL";
  }
  return "?";
}

std::optional<Metric> metric_from_string(std::string_view name) {
  const std::string u = upper(trim(name));
  for (Metric m : {Metric::Stoi, Metric::Pesq, Metric::Peaq, Metric::Visqol}) {
    if (u == to_string(m)) return m;
  }
  return std::nullopt;
}

std::pair<double, double> metric_range(Metric m) {
  return m == Metric::Stoi ? std::pair{0.0, 1.0} : std::pair{1.0, 5.0};
}

std::vector<double> resample_poly(std::span<const double> x, int up, int down) {
  if (up < 1 || down < 1) throw std::invalid_argument("resampling factors must be positive");
  const int g = std::gcd(up, down);
  up /= g;
  down /= g;
  if (up == 1 && down == 1) return {x.begin(), x.end()};

  // Kaiser-windowed sinc with 60 dB stop-band rejection.
  const double cutoff = 1.0 / (2.0 * std::max(up, down));
  const double rejection_db = 60.0;
  const double roll_off = cutoff / 10.0;
  const auto half = static_cast<long>(std::ceil((rejection_db - 8.0) / (28.714 * roll_off)));
  const double beta = 0.1102 * (rejection_db - 8.7);
  const long taps = 2 * half + 1;
  std::vector<double> h(static_cast<std::size_t>(taps));
  double sum = 0.0;
  for (long n = 0; n < taps; ++n) {
    const double t = static_cast<double>(n - half);
    const double arg = 2.0 * cutoff * t;
    const double sinc = arg == 0.0 ? 1.0 : std::sin(std::numbers::pi * arg) / (std::numbers::pi * arg);
    const double r = 2.0 * static_cast<double>(n) / static_cast<double>(taps - 1) - 1.0;
    const double win = std::cyl_bessel_i(0.0, beta * std::sqrt(std::max(0.0, 1.0 - r * r))) / std::cyl_bessel_i(0.0, beta);
    h[static_cast<std::size_t>(n)] = sinc * win;
    sum += h[static_cast<std::size_t>(n)];
  }
  // Unity gain per polyphase branch.
  for (auto& v : h) v *= static_cast<double>(up) / sum;

  const auto n_in = static_cast<long>(x.size());
  const long n_out = (n_in * up + down - 1) / down;
  std::vector<double> y(static_cast<std::size_t>(n_out));
  for (long m = 0; m < n_out; ++m) {
    const long u = m * down;
    long j_lo = (u - half + up - 1) / up;
    if (u - half < 0) j_lo = -((half - u) / up);
    const long j_hi = std::min(n_in - 1, (u + half) / up);
    double acc = 0.0;
    for (long j = std::max(0L, j_lo); j <= j_hi; ++j) acc += x[static_cast<std::size_t>(j)] * h[static_cast<std::size_t>(u - j * up + half)];
    y[static_cast<std::size_t>(m)] = acc;
  }
  return y;
}

QualityScore stoi(const AudioClip& reference, const AudioClip& degraded) {
  using namespace stoi_config;
  if (reference.sample_rate_hz != degraded.sample_rate_hz) throw std::invalid_argument("STOI inputs differ in sample rate");
  if (reference.size() != degraded.size()) throw std::invalid_argument("STOI inputs differ in length");
  require_finite(reference);
  require_finite(degraded);
  if (std::all_of(reference.samples.begin(), reference.samples.end(), [](double v) { return v == 0.0; })) {
    throw std::invalid_argument("STOI reference is silent");
  }

  std::vector<double> x = resample_poly(reference.samples, kSampleRate, reference.sample_rate_hz);
  std::vector<double> y = resample_poly(degraded.samples, kSampleRate, degraded.sample_rate_hz);
  std::tie(x, y) = remove_silent_frames(x, y);

  const auto ex = band_envelopes(power_frames(x));
  const auto ey = band_envelopes(power_frames(y));
  const std::size_t frames = ex.empty() ? 0 : ex.front().size();
  if (frames < kSegment) {
    throw std::invalid_argument("STOI needs at least " + std::to_string(kSegment) + " active frames, got " +
                                std::to_string(frames));
  }

  const double clip = std::pow(10.0, -kBetaDb / 20.0);
  double total = 0.0;
  std::size_t count = 0;
  std::vector<double> xs(kSegment), ys(kSegment);
  for (std::size_t m = kSegment; m <= frames; ++m) {
    for (std::size_t j = 0; j < ex.size(); ++j) {
      double nx = 0.0, ny = 0.0;
      for (std::size_t k = 0; k < kSegment; ++k) {
        xs[k] = ex[j][m - kSegment + k];
        ys[k] = ey[j][m - kSegment + k];
        nx += xs[k] * xs[k];
        ny += ys[k] * ys[k];
      }
      const double alpha = std::sqrt(nx) / (std::sqrt(ny) + kEps);
      for (std::size_t k = 0; k < kSegment; ++k) ys[k] = std::min(ys[k] * alpha, xs[k] * (1.0 + clip));
      const double mx = std::accumulate(xs.begin(), xs.end(), 0.0) / kSegment;
      const double my = std::accumulate(ys.begin(), ys.end(), 0.0) / kSegment;
      double sxy = 0.0, sxx = 0.0, syy = 0.0;
      for (std::size_t k = 0; k < kSegment; ++k) {
        const double a = xs[k] - mx, b = ys[k] - my;
        sxy += a * b;
        sxx += a * a;
        syy += b * b;
      }
      total += sxy / ((std::sqrt(sxx) + kEps) * (std::sqrt(syy) + kEps));
      ++count;
    }
  }
  QualityScore s;
  s.metric = Metric::Stoi;
  s.value = std::clamp(total / static_cast<double>(count), 0.0, 1.0);
  s.source = ScoreSource::Internal;
  return s;
}

std::vector<QualityScore> import_scores(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open score file " + path.string());
  std::vector<QualityScore> out;
  std::string line;
  std::size_t line_no = 0;
  auto fail = [&](const std::string& what) {
    throw std::runtime_error(path.string() + ":" + std::to_string(line_no) + ": " + what);
  };
  while (std::getline(in, line)) {
    ++line_no;
    const std::string_view row = trim(line);
    if (row.empty()) continue;
    std::vector<std::string_view> cells;
    std::size_t start = 0;
    while (true) {
      const auto comma = row.find(',', start);
      cells.push_back(trim(row.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start)));
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
    if (cells.size() != 3) fail("expected 3 columns");
    if (line_no == 1 && upper(cells[0]) == "METRIC") continue;
    const auto metric = metric_from_string(cells[0]);
    if (!metric) fail("unknown metric '" + std::string(cells[0]) + "'");
    double value = 0.0;
    const auto [ptr, ec] = std::from_chars(cells[2].data(), cells[2].data() + cells[2].size(), value);
    if (ec != std::errc{} || ptr != cells[2].data() + cells[2].size() || !std::isfinite(value)) {
      fail("invalid value '" + std::string(cells[2]) + "'");
    }
    const auto [lo, hi] = metric_range(*metric);
    if (value < lo || value > hi) {
      std::ostringstream msg;
      msg << to_string(*metric) << " value " << value << " outside [" << lo << ", " << hi << "]";
      fail(msg.str());
    }
    out.push_back({*metric, value, ScoreSource::Imported, std::string(cells[1])});
  }
  return out;
}

}  // namespace tractfit
