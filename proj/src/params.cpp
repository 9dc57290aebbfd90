#include "tractfit/params.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace tractfit {

std::optional<Param> param_from_name(std::string_view name) {
  for (std::size_t i = 0; i < kNumParams; ++i) {
    if (kParamInfo[i].name == name || kParamInfo[i].short_name == name) return static_cast<Param>(i);
  }
  return std::nullopt;
}

TractParams::TractParams(const ParamArray& values) : values_(values) {
  for (std::size_t i = 0; i < kNumParams; ++i) {
    const auto& pi = kParamInfo[i];
    const double v = values_[i];
    if (!(v >= pi.lower && v <= pi.upper)) {
      throw std::out_of_range(std::string(pi.name) + " = " + std::to_string(v) + " outside [" +
                              std::to_string(pi.lower) + ", " + std::to_string(pi.upper) + "]");
    }
  }
}

TractParams TractParams::lower_bounds() {
  ParamArray v{};
  for (std::size_t i = 0; i < kNumParams; ++i) v[i] = kParamInfo[i].lower;
  return TractParams(v);
}

TractParams TractParams::upper_bounds() {
  ParamArray v{};
  for (std::size_t i = 0; i < kNumParams; ++i) v[i] = kParamInfo[i].upper;
  return TractParams(v);
}

TractParams TractParams::with(Param p, double value) const {
  ParamArray v = values_;
  v[index_of(p)] = value;
  return TractParams(v);
}

NormalizedParams::NormalizedParams(const ParamArray& x) : x_(x) {
  for (std::size_t i = 0; i < kNumParams; ++i) {
    if (!(x_[i] >= 0.0 && x_[i] <= 1.0)) {
      throw std::out_of_range("normalized " + std::string(kParamInfo[i].name) + " = " +
                              std::to_string(x_[i]) + " outside [0, 1]");
    }
  }
}

NormalizedParams normalize(const TractParams& p) {
  ParamArray x{};
  for (std::size_t i = 0; i < kNumParams; ++i) {
    const auto& pi = kParamInfo[i];
    x[i] = std::clamp((p.values()[i] - pi.lower) / pi.range(), 0.0, 1.0);
  }
  return NormalizedParams(x);
}

TractParams denormalize(const NormalizedParams& x) {
  ParamArray v{};
  for (std::size_t i = 0; i < kNumParams; ++i) {
    const auto& pi = kParamInfo[i];
    v[i] = std::clamp(pi.lower + x[i] * pi.range(), pi.lower, pi.upper);
  }
  return TractParams(v);
}

NormalizedParams clamp_normalized(const ParamArray& x) {
  ParamArray c{};
  for (std::size_t i = 0; i < kNumParams; ++i) {
    if (std::isnan(x[i])) throw std::invalid_argument("NaN normalized parameter");
    c[i] = std::clamp(x[i], 0.0, 1.0);
  }
  return NormalizedParams(c);
}

ParamTrajectory::ParamTrajectory(std::vector<Keyframe> keyframes) : keyframes_(std::move(keyframes)) {
  if (keyframes_.empty()) throw std::invalid_argument("trajectory needs at least one keyframe");
  if (keyframes_.front().time_s != 0.0) throw std::invalid_argument("first keyframe must be at t = 0");
  for (std::size_t i = 1; i < keyframes_.size(); ++i) {
    if (!(keyframes_[i].time_s > keyframes_[i - 1].time_s)) {
      throw std::invalid_argument("keyframe times must be strictly increasing");
    }
  }
  normalized_.reserve(keyframes_.size());
  for (const auto& k : keyframes_) normalized_.push_back(normalize(k.params));
}

ParamTrajectory ParamTrajectory::constant(const TractParams& p) {
  return ParamTrajectory({Keyframe{0.0, p}});
}

NormalizedParams ParamTrajectory::at(double time_s) const {
  if (time_s <= 0.0 || keyframes_.size() == 1) return normalized_.front();
  if (time_s >= keyframes_.back().time_s) return normalized_.back();
  const auto it = std::upper_bound(keyframes_.begin(), keyframes_.end(), time_s,
                                   [](double t, const Keyframe& k) { return t < k.time_s; });
  const auto hi = static_cast<std::size_t>(it - keyframes_.begin());
  const auto lo = hi - 1;
  const double t0 = keyframes_[lo].time_s;
  const double t1 = keyframes_[hi].time_s;
  const double a = (time_s - t0) / (t1 - t0);
  ParamArray x{};
  for (std::size_t i = 0; i < kNumParams; ++i) {
    x[i] = normalized_[lo][i] + a * (normalized_[hi][i] - normalized_[lo][i]);
  }
  return clamp_normalized(x);
}

}  // namespace tractfit
