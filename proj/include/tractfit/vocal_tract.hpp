#pragma once

// Kelly-Lochbaum waveguide vocal tract with an LF glottal source, driven by
// the eight articulatory controls in params.hpp.

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "tractfit/audio_clip.hpp"
#include "tractfit/params.hpp"
#include "tractfit/rng.hpp"

namespace tractfit {

inline constexpr std::size_t kTractSections = 44;

using DiameterProfile = std::array<double, kTractSections>;

struct SynthConfig {
  int sample_rate_hz = kPipelineSampleRate;
  int tract_sections = static_cast<int>(kTractSections);
  int control_block_samples = 64;
  std::uint64_t seed = 0;

  // Throws std::invalid_argument on a non-positive rate or block size, or
  // fewer than two sections.
  void validate() const;
};

// Tract landmarks (section indices in the 44-section layout).
namespace tract_layout {
inline constexpr std::size_t kPharynxBegin = 7;   // first throat section
inline constexpr std::size_t kPharynxEnd = 12;    // one past the last throat section
inline constexpr std::size_t kBladeBegin = 10;    // tongue bump support
inline constexpr std::size_t kLipBegin = 39;
inline constexpr std::size_t kTongueSpan = 22;    // tip start - blade start
inline constexpr std::size_t kLipSections = 2;
inline constexpr double kConstrictionHalfWidth = 4.0;
inline constexpr double kGlottalReflection = 0.75;
inline constexpr double kLipReflection = -0.85;
}  // namespace tract_layout

// Rest shape before any articulation: 0.6 -> 1.1 cm ramp over sections 0-6,
// 1.1 cm pharynx (7-11), 1.5 cm oral cavity.
DiameterProfile rest_profile();

DiameterProfile map_params_to_diameters(const TractParams& p);

// Linear resampling of a 44-section profile onto `sections` sections.
std::vector<double> resample_profile(const DiameterProfile& profile, std::size_t sections);

// Shape constants of one LF flow-derivative pulse on a unit period, with the
// negative peak normalized to -1.
struct LfShape {
  double rd = 0.0;
  double te = 0.0;       // instant of maximum excitation
  double tp = 0.0;       // instant of peak flow
  double alpha = 0.0;
  double omega = 0.0;
  double epsilon = 0.0;
  double e0 = 0.0;
  double shift = 0.0;
  double delta = 1.0;

  static LfShape from_voiceness(double voiceness);
  double operator()(double t) const;  // t in [0, 1)
};

// Periodic LF pulses plus open-phase gated, 1 kHz low-passed aspiration noise.
class GlottalSource {
 public:
  GlottalSource(double sample_rate_hz, CounterRng noise);

  // New pitch applies immediately; new voiceness takes effect on the pulse
  // shape at the next period boundary.
  void set_controls(double pitch_hz, double voiceness);
  double next();

  double noise_gain() const;
  double voiced_gain() const;

 private:
  void start_period();

  double sample_rate_;
  CounterRng noise_;
  double pitch_hz_ = 100.0;
  double voiceness_ = 1.0;
  double period_voiceness_ = 1.0;
  double voiced_gain_ = 1.0;
  double phase_ = 0.0;
  bool started_ = false;
  LfShape shape_;
  // Butterworth low-pass biquad state for the aspiration noise.
  std::array<double, 5> lp_coeffs_{};
  double z1_ = 0.0;
  double z2_ = 0.0;
};

// Convenience wrapper: n samples from a fresh source at 48 kHz.
std::vector<double> glottal_source(double pitch_hz, double voiceness, std::size_t n_samples,
                                   const CounterRng& rng, int sample_rate_hz = kPipelineSampleRate);

// Chain of cylindrical sections with one-sample delays per section. Each
// call to step() is one scattering pass.
class Waveguide {
 public:
  explicit Waveguide(std::size_t sections);

  // Sets the target shape for the next control block. Reflection
  // coefficients are cross-faded from the previous block's values by the
  // lambda passed to step().
  void set_profile(std::span<const double> diameters_cm);

  // One scattering pass with glottal input `excitation`; returns the
  // forward wave leaving the lips.
  double step(double excitation, double lambda);

  void reset();
  std::size_t sections() const { return right_.size(); }
  std::span<const double> reflections() const { return reflection_; }

 private:
  std::vector<double> right_, left_;
  std::vector<double> next_right_, next_left_;
  std::vector<double> reflection_, prev_reflection_, blended_;
  bool has_profile_ = false;
  bool steady_ = true;
};

// Per-sample amplitude scale applied before clamping to [-1, 1].
inline constexpr double kOutputGain = 0.7;
inline constexpr double kFadeInSeconds = 0.010;

AudioClip synthesize_static(const TractParams& p, double duration_s, const SynthConfig& cfg = {});
AudioClip synthesize_trajectory(const ParamTrajectory& traj, double duration_s,
                                const SynthConfig& cfg = {});

// Sample count for a duration at the configured rate.
std::size_t sample_count(double duration_s, int sample_rate_hz);

}  // namespace tractfit
