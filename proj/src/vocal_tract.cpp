#include "tractfit/vocal_tract.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace tractfit {

namespace {

constexpr double kPi = std::numbers::pi;
// Per-pass amplitude retained by each section (wall losses).
constexpr double kWallLoss = 0.999;
constexpr std::uint64_t kGlottisStream = 0x676c6f74;  // "glot"

constexpr double kRestMouth = 1.5;
constexpr double kRestPharynx = 1.1;
constexpr double kRestGlottis = 0.6;

double tongue_depth(double tongue_diameter_cm) {
  // Fractional narrowing at the bump centre: zero at the widest setting
  // (3 cm), 0.644 at the narrowest (1.55 cm -> 0.533 cm centre diameter).
  const double centre = kRestMouth - (info(Param::TongueDiameter).upper - tongue_diameter_cm) / 1.5;
  return (kRestMouth - centre) / kRestMouth;
}

}  // namespace

void SynthConfig::validate() const {
  if (sample_rate_hz <= 0) throw std::invalid_argument("sample_rate_hz must be positive");
  if (tract_sections < 2) throw std::invalid_argument("tract_sections must be >= 2");
  if (control_block_samples <= 0) throw std::invalid_argument("control_block_samples must be positive");
}

std::size_t sample_count(double duration_s, int sample_rate_hz) {
  if (!(duration_s > 0.0) || !std::isfinite(duration_s)) {
    throw std::invalid_argument("duration must be positive");
  }
  return static_cast<std::size_t>(std::llround(duration_s * sample_rate_hz));
}

DiameterProfile rest_profile() {
  using namespace tract_layout;
  DiameterProfile d{};
  for (std::size_t i = 0; i < kTractSections; ++i) {
    if (i < kPharynxBegin) {
      d[i] = kRestGlottis + (kRestPharynx - kRestGlottis) * static_cast<double>(i) / (kPharynxBegin - 1);
    } else if (i < kPharynxEnd) {
      d[i] = kRestPharynx;
    } else {
      d[i] = kRestMouth;
    }
  }
  return d;
}

DiameterProfile map_params_to_diameters(const TractParams& p) {
  using namespace tract_layout;
  DiameterProfile d = rest_profile();

  const double throat_scale = p.throat_diameter_cm() / 1.0;
  for (std::size_t i = kPharynxBegin; i < kPharynxEnd; ++i) d[i] *= throat_scale;

  const double depth = tongue_depth(p.tongue_diameter_cm());
  for (std::size_t i = kBladeBegin; i < kLipBegin; ++i) {
    const double t = 1.1 * kPi * (p.tongue_index() - static_cast<double>(i)) / kTongueSpan;
    const double bump = std::abs(t) <= kPi / 2 ? std::cos(t) : 0.0;
    d[i] *= 1.0 - depth * bump;
  }

  for (std::size_t i = kTractSections - kLipSections; i < kTractSections; ++i) {
    d[i] = p.lips_diameter_cm();
  }

  const auto& cinfo = info(Param::ConstrictionDiameter);
  const double floor_cm = p.constriction_diameter_cm();
  const double strength = (cinfo.upper - floor_cm) / cinfo.range();
  for (std::size_t i = 0; i < kTractSections; ++i) {
    const double offset = static_cast<double>(i) - p.constriction_index();
    if (std::abs(offset) >= kConstrictionHalfWidth) continue;
    const double a = strength * 0.5 * (1.0 + std::cos(kPi * offset / kConstrictionHalfWidth));
    if (d[i] > floor_cm) d[i] = (1.0 - a) * d[i] + a * floor_cm;
  }
  return d;
}

std::vector<double> resample_profile(const DiameterProfile& profile, std::size_t sections) {
  if (sections < 2) throw std::invalid_argument("need at least two sections");
  if (sections == kTractSections) return {profile.begin(), profile.end()};
  std::vector<double> out(sections);
  const double scale = static_cast<double>(kTractSections - 1) / static_cast<double>(sections - 1);
  for (std::size_t i = 0; i < sections; ++i) {
    const double u = static_cast<double>(i) * scale;
    const auto lo = std::min(static_cast<std::size_t>(u), kTractSections - 2);
    const double a = u - static_cast<double>(lo);
    out[i] = (1.0 - a) * profile[lo] + a * profile[lo + 1];
  }
  return out;
}

// ---------------------------------------------------------------------------
// LF glottal pulse

LfShape LfShape::from_voiceness(double voiceness) {
  LfShape s;
  s.rd = std::clamp(3.0 * (1.0 - voiceness), 0.5, 2.7);
  const double rd = s.rd;
  const double ra = -0.01 + 0.048 * rd;
  const double rk = 0.224 + 0.118 * rd;
  const double rg = (rk / 4.0) * (0.5 + 1.2 * rk) / (0.11 * rd - ra * (0.5 + 1.2 * rk));

  const double ta = ra;
  s.tp = 1.0 / (2.0 * rg);
  s.te = s.tp + s.tp * rk;
  s.epsilon = 1.0 / ta;
  s.shift = std::exp(-s.epsilon * (1.0 - s.te));
  s.delta = 1.0 - s.shift;

  // Choose alpha so the pulse integrates to zero over the period.
  double rhs_integral = (1.0 / s.epsilon) * (s.shift - 1.0) + (1.0 - s.te) * s.shift;
  rhs_integral /= s.delta;
  const double lower_integral = -(s.te - s.tp) / 2.0 + rhs_integral;
  const double upper_integral = -lower_integral;
  s.omega = kPi / s.tp;
  const double sn = std::sin(s.omega * s.te);
  const double y = -kPi * sn * upper_integral / (s.tp * 2.0);
  s.alpha = std::log(y) / (s.tp / 2.0 - s.te);
  s.e0 = -1.0 / (sn * std::exp(s.alpha * s.te));
  return s;
}

double LfShape::operator()(double t) const {
  if (t > te) return (-std::exp(-epsilon * (t - te)) + shift) / delta;
  return e0 * std::exp(alpha * t) * std::sin(omega * t);
}

GlottalSource::GlottalSource(double sample_rate_hz, CounterRng noise)
    : sample_rate_(sample_rate_hz), noise_(noise) {
  // RBJ low-pass, fc = 1 kHz, Q = 1/sqrt(2).
  const double w0 = 2.0 * kPi * 1000.0 / sample_rate_;
  const double cw = std::cos(w0);
  const double alpha = std::sin(w0) * std::numbers::sqrt2 / 2.0;
  const double a0 = 1.0 + alpha;
  lp_coeffs_ = {(1.0 - cw) / 2.0 / a0, (1.0 - cw) / a0, (1.0 - cw) / 2.0 / a0, -2.0 * cw / a0,
                (1.0 - alpha) / a0};
}

void GlottalSource::set_controls(double pitch_hz, double voiceness) {
  pitch_hz_ = pitch_hz;
  voiceness_ = voiceness;
}

void GlottalSource::start_period() {
  period_voiceness_ = voiceness_;
  shape_ = LfShape::from_voiceness(period_voiceness_);
  voiced_gain_ = std::pow(period_voiceness_, 0.25);
}

double GlottalSource::voiced_gain() const { return voiced_gain_; }
double GlottalSource::noise_gain() const { return 0.2 * (1.0 - period_voiceness_); }

double GlottalSource::next() {
  if (!started_) {
    start_period();
    started_ = true;
  }
  const double t = phase_;
  const double voiced = voiced_gain() * shape_(t);

  const double white = 2.0 * noise_.uniform() - 1.0;
  const auto& c = lp_coeffs_;
  const double lp = c[0] * white + z1_;
  z1_ = c[1] * white - c[3] * lp + z2_;
  z2_ = c[2] * white - c[4] * lp;
  const double gate = t <= shape_.te ? 1.0 : 0.0;
  const double aspiration = noise_gain() * gate * lp;

  phase_ += pitch_hz_ / sample_rate_;
  if (phase_ >= 1.0) {
    phase_ -= std::floor(phase_);
    start_period();
  }
  return voiced + aspiration;
}

std::vector<double> glottal_source(double pitch_hz, double voiceness, std::size_t n_samples,
                                   const CounterRng& rng, int sample_rate_hz) {
  GlottalSource src(sample_rate_hz, rng);
  src.set_controls(pitch_hz, voiceness);
  std::vector<double> out(n_samples);
  for (auto& v : out) v = src.next();
  return out;
}

// ---------------------------------------------------------------------------
// Waveguide

Waveguide::Waveguide(std::size_t sections)
    : right_(sections, 0.0),
      left_(sections, 0.0),
      next_right_(sections, 0.0),
      next_left_(sections, 0.0),
      reflection_(sections, 0.0),
      prev_reflection_(sections, 0.0),
      blended_(sections, 0.0) {
  if (sections < 2) throw std::invalid_argument("waveguide needs at least two sections");
}

void Waveguide::reset() {
  std::fill(right_.begin(), right_.end(), 0.0);
  std::fill(left_.begin(), left_.end(), 0.0);
  has_profile_ = false;
}

void Waveguide::set_profile(std::span<const double> diameters_cm) {
  if (diameters_cm.size() != right_.size()) throw std::invalid_argument("profile length mismatch");
  prev_reflection_.swap(reflection_);
  double prev_area = diameters_cm[0] * diameters_cm[0];
  for (std::size_t i = 1; i < diameters_cm.size(); ++i) {
    // Areas are proportional to d^2; the pi/4 factor cancels in the ratio.
    const double area = diameters_cm[i] * diameters_cm[i];
    const double sum = prev_area + area;
    reflection_[i] = sum > 0.0 ? (prev_area - area) / sum : 0.0;
    prev_area = area;
  }
  if (!has_profile_) {
    prev_reflection_ = reflection_;
    has_profile_ = true;
  }
  steady_ = prev_reflection_ == reflection_;
}

double Waveguide::step(double excitation, double lambda) {
  using namespace tract_layout;
  const std::size_t n = right_.size();
  const double* r = reflection_.data();
  if (!steady_) {
    for (std::size_t i = 1; i < n; ++i) {
      blended_[i] = prev_reflection_[i] * (1.0 - lambda) + reflection_[i] * lambda;
    }
    r = blended_.data();
  }
  const double* R = right_.data();
  const double* L = left_.data();
  double* nR = next_right_.data();
  double* nL = next_left_.data();
  // Junction i joins sections i-1 and i.
  for (std::size_t i = 1; i < n; ++i) {
    const double w = r[i] * (R[i - 1] + L[i]);
    nR[i] = (R[i - 1] - w) * kWallLoss;
    nL[i - 1] = (L[i] + w) * kWallLoss;
  }
  nR[0] = (L[0] * kGlottalReflection + excitation) * kWallLoss;
  nL[n - 1] = R[n - 1] * kLipReflection * kWallLoss;
  right_.swap(next_right_);
  left_.swap(next_left_);
  return right_[n - 1];
}

// ---------------------------------------------------------------------------

AudioClip synthesize_trajectory(const ParamTrajectory& traj, double duration_s, const SynthConfig& cfg) {
  cfg.validate();
  const std::size_t n = sample_count(duration_s, cfg.sample_rate_hz);
  const auto fs = static_cast<double>(cfg.sample_rate_hz);
  const auto block = static_cast<std::size_t>(cfg.control_block_samples);
  const auto fade_len = static_cast<std::size_t>(std::llround(kFadeInSeconds * fs));

  AudioClip clip;
  clip.sample_rate_hz = cfg.sample_rate_hz;
  clip.samples.resize(n);

  Waveguide tract(static_cast<std::size_t>(cfg.tract_sections));
  GlottalSource glottis(fs, CounterRng(cfg.seed, kGlottisStream));

  for (std::size_t start = 0; start < n; start += block) {
    const TractParams p = denormalize(traj.at(static_cast<double>(start) / fs));
    tract.set_profile(resample_profile(map_params_to_diameters(p), tract.sections()));
    glottis.set_controls(p.pitch_hz(), p.voiceness());

    const std::size_t len = std::min(block, n - start);
    for (std::size_t j = 0; j < len; ++j) {
      const double g = glottis.next();
      const double l1 = tract.step(g, static_cast<double>(j) / block);
      const double l2 = tract.step(g, (static_cast<double>(j) + 0.5) / block);
      double y = 0.5 * (l1 + l2) * kOutputGain;
      const std::size_t idx = start + j;
      if (idx < fade_len) y *= 0.5 * (1.0 - std::cos(kPi * static_cast<double>(idx) / fade_len));
      clip.samples[idx] = std::clamp(y, -1.0, 1.0);
    }
  }
  return clip;
}

AudioClip synthesize_static(const TractParams& p, double duration_s, const SynthConfig& cfg) {
  return synthesize_trajectory(ParamTrajectory::constant(p), duration_s, cfg);
}

}  // namespace tractfit
