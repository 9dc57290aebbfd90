#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <string_view>
#include <vector>

namespace tractfit {

// The eight articulatory controls, in canonical order.
enum class Param : std::size_t {
  Pitch = 0,
  Voiceness,
  TongueIndex,
  TongueDiameter,
  LipsDiameter,
  ConstrictionIndex,
  ConstrictionDiameter,
  ThroatDiameter,
};

inline constexpr std::size_t kNumParams = 8;

struct ParamInfo {
  std::string_view name;       // JSON key
  std::string_view short_name; // report column suffix
  double lower;
  double upper;

  constexpr double range() const { return upper - lower; }
};

inline constexpr std::array<ParamInfo, kNumParams> kParamInfo{{
    {"pitch_hz", "pitch", 75.0, 330.0},
    {"voiceness", "voiceness", 0.0, 1.0},
    {"tongue_index", "tongue_idx", 14.0, 27.0},
    {"tongue_diameter_cm", "tongue_diam", 1.55, 3.0},
    {"lips_diameter_cm", "lips", 0.6, 1.2},
    {"constriction_index", "constr_idx", 12.0, 42.0},
    {"constriction_diameter_cm", "constr_diam", 0.6, 1.2},
    {"throat_diameter_cm", "throat", 0.5, 1.0},
}};

constexpr std::size_t index_of(Param p) { return static_cast<std::size_t>(p); }
constexpr const ParamInfo& info(Param p) { return kParamInfo[index_of(p)]; }

// Looks a parameter up by its JSON name or short name.
std::optional<Param> param_from_name(std::string_view name);

using ParamArray = std::array<double, kNumParams>;

// Physical control values. Construction validates every component against
// its bounds and throws std::out_of_range otherwise.
class TractParams {
 public:
  explicit TractParams(const ParamArray& values);

  static TractParams lower_bounds();
  static TractParams upper_bounds();

  double operator[](Param p) const { return values_[index_of(p)]; }
  const ParamArray& values() const { return values_; }

  double pitch_hz() const { return values_[0]; }
  double voiceness() const { return values_[1]; }
  double tongue_index() const { return values_[2]; }
  double tongue_diameter_cm() const { return values_[3]; }
  double lips_diameter_cm() const { return values_[4]; }
  double constriction_index() const { return values_[5]; }
  double constriction_diameter_cm() const { return values_[6]; }
  double throat_diameter_cm() const { return values_[7]; }

  // Copy with one component replaced (validated).
  TractParams with(Param p, double value) const;

  friend bool operator==(const TractParams&, const TractParams&) = default;

 private:
  ParamArray values_;
};

// Unit-box coordinates: an affine image of TractParams. Components must lie
// in [0, 1]; construction throws std::out_of_range otherwise.
class NormalizedParams {
 public:
  explicit NormalizedParams(const ParamArray& x);

  double operator[](Param p) const { return x_[index_of(p)]; }
  double operator[](std::size_t i) const { return x_[i]; }
  const ParamArray& values() const { return x_; }

  friend bool operator==(const NormalizedParams&, const NormalizedParams&) = default;

 private:
  ParamArray x_;
};

NormalizedParams normalize(const TractParams& p);
TractParams denormalize(const NormalizedParams& x);

// Clamps each component into [0, 1] before constructing.
NormalizedParams clamp_normalized(const ParamArray& x);

struct Keyframe {
  double time_s;
  TractParams params;
};

// Piecewise-linear control trajectory, interpolated in normalized space and
// held constant after the last keyframe.
class ParamTrajectory {
 public:
  // Throws std::invalid_argument unless non-empty, first time is 0 and times
  // strictly increase.
  explicit ParamTrajectory(std::vector<Keyframe> keyframes);

  static ParamTrajectory constant(const TractParams& p);

  NormalizedParams at(double time_s) const;
  const std::vector<Keyframe>& keyframes() const { return keyframes_; }

 private:
  std::vector<Keyframe> keyframes_;
  std::vector<NormalizedParams> normalized_;
};

}  // namespace tractfit
