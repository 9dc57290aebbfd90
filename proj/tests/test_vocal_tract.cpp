#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstring>
#include <numbers>

#include "support.hpp"
#include "tractfit/inversion.hpp"
#include "tractfit/vocal_tract.hpp"

using namespace tractfit;

TEST_SUITE("params") {
  TEST_CASE("all-zero normalized vector maps to the lower bounds") {
    ParamArray zeros{};
    const TractParams p = denormalize(NormalizedParams(zeros));
    CHECK(p.pitch_hz() == 75.0);
    CHECK(p.voiceness() == 0.0);
    CHECK(p.tongue_index() == 14.0);
    CHECK(p.tongue_diameter_cm() == 1.55);
    CHECK(p.lips_diameter_cm() == 0.6);
    CHECK(p.constriction_index() == 12.0);
    CHECK(p.constriction_diameter_cm() == 0.6);
    CHECK(p.throat_diameter_cm() == 0.5);
  }

  TEST_CASE("all-one normalized vector maps to the upper bounds") {
    ParamArray ones;
    ones.fill(1.0);
    const TractParams p = denormalize(NormalizedParams(ones));
    const ParamArray expected = {330.0, 1.0, 27.0, 3.0, 1.2, 42.0, 1.2, 1.0};
    for (std::size_t i = 0; i < kNumParams; ++i) CHECK(p.values()[i] == doctest::Approx(expected[i]).epsilon(1e-15));
    CHECK(p == TractParams::upper_bounds());
  }

  TEST_CASE("pitch 202.5 Hz normalizes to one half") {
    const TractParams p = mid_params().with(Param::Pitch, 202.5);
    CHECK(normalize(p)[Param::Pitch] == doctest::Approx(0.5).epsilon(1e-15));
  }

  TEST_CASE("normalize and denormalize round-trip to 1e-12") {
    for (std::uint64_t s = 0; s < 200; ++s) {
      const TractParams p = tf_test::random_params(s);
      const TractParams back = denormalize(normalize(p));
      for (std::size_t i = 0; i < kNumParams; ++i) CHECK(std::abs(back.values()[i] - p.values()[i]) <= 1e-12);
    }
  }

  TEST_CASE("out-of-range values are rejected") {
    ParamArray a = mid_params().values();
    a[0] = 74.9;
    CHECK_THROWS_AS(TractParams{a}, std::out_of_range);
    a = mid_params().values();
    a[5] = 42.5;
    CHECK_THROWS_AS(TractParams{a}, std::out_of_range);
    ParamArray x{};
    x[3] = 1.0000001;
    CHECK_THROWS_AS(NormalizedParams{x}, std::out_of_range);
    x[3] = -1e-9;
    CHECK_THROWS_AS(NormalizedParams{x}, std::out_of_range);
    CHECK_THROWS(mid_params().with(Param::Voiceness, 1.5));
  }

  TEST_CASE("parameter names resolve in both long and short form") {
    CHECK(param_from_name("pitch_hz") == Param::Pitch);
    CHECK(param_from_name("constr_diam") == Param::ConstrictionDiameter);
    CHECK_FALSE(param_from_name("velum").has_value());
  }

  TEST_CASE("trajectory validation") {
    const TractParams p = mid_params();
    CHECK_THROWS_AS(ParamTrajectory(std::vector<Keyframe>{}), std::invalid_argument);
    CHECK_THROWS_AS(ParamTrajectory({{0.1, p}}), std::invalid_argument);
    CHECK_THROWS_AS(ParamTrajectory({{0.0, p}, {0.5, p}, {0.5, p}}), std::invalid_argument);
    CHECK_NOTHROW(ParamTrajectory({{0.0, p}, {0.5, p}}));
  }

  TEST_CASE("trajectory interpolates in normalized space and holds the last keyframe") {
    const TractParams a = TractParams::lower_bounds();
    const TractParams b = TractParams::upper_bounds();
    const ParamTrajectory t({{0.0, a}, {1.0, b}});
    for (std::size_t i = 0; i < kNumParams; ++i) {
      CHECK(t.at(0.25)[i] == doctest::Approx(0.25));
      CHECK(t.at(3.0)[i] == doctest::Approx(1.0));
    }
  }
}

TEST_SUITE("tract geometry") {
  TEST_CASE("rest profile layout") {
    const auto r = rest_profile();
    CHECK(r[0] == doctest::Approx(0.6));
    CHECK(r[6] == doctest::Approx(1.1));
    for (std::size_t i = 1; i < 7; ++i) CHECK(r[i] > r[i - 1]);
    for (std::size_t i = 7; i < 12; ++i) CHECK(r[i] == doctest::Approx(1.1));
    for (std::size_t i = 12; i < kTractSections; ++i) CHECK(r[i] == doctest::Approx(1.5));
  }

  TEST_CASE("maximal tongue and constriction diameters leave the rest profile untouched") {
    const TractParams p = tf_test::random_params(3)
                              .with(Param::TongueDiameter, 3.0)
                              .with(Param::ConstrictionDiameter, 1.2);
    const auto d = map_params_to_diameters(p);
    const auto r = rest_profile();
    for (std::size_t i = 0; i < kTractSections; ++i) {
      const bool throat = i >= tract_layout::kPharynxBegin && i < tract_layout::kPharynxEnd;
      const bool lips = i >= kTractSections - tract_layout::kLipSections;
      if (!throat && !lips) CHECK(d[i] == r[i]);
    }
    for (std::size_t i = kTractSections - 2; i < kTractSections; ++i) CHECK(d[i] == p.lips_diameter_cm());
  }

  TEST_CASE("throat diameter scales the pharynx sections") {
    const TractParams p = mid_params()
                              .with(Param::TongueDiameter, 3.0)
                              .with(Param::ConstrictionDiameter, 1.2)
                              .with(Param::ThroatDiameter, 0.5);
    const auto d = map_params_to_diameters(p);
    for (std::size_t i = 7; i < 12; ++i) CHECK(d[i] == doctest::Approx(0.55));
  }

  TEST_CASE("full constriction at section 27 reaches 0.6 cm") {
    const TractParams p = mid_params()
                              .with(Param::ConstrictionIndex, 27.0)
                              .with(Param::ConstrictionDiameter, 0.6);
    const auto d = map_params_to_diameters(p);
    CHECK(*std::min_element(d.begin() + 25, d.begin() + 30) <= 0.6);
  }

  TEST_CASE("tongue bump narrows the blade around the tongue index") {
    const TractParams p = mid_params().with(Param::TongueDiameter, 1.55).with(Param::TongueIndex, 20.0)
                              .with(Param::ConstrictionDiameter, 1.2);
    const auto d = map_params_to_diameters(p);
    const auto r = rest_profile();
    CHECK(d[20] < r[20]);
    CHECK(d[20] < d[15]);
    CHECK(d[20] < d[25]);
  }

  TEST_CASE("mapping is deterministic") {
    const TractParams p = tf_test::random_params(11);
    const auto a = map_params_to_diameters(p);
    const auto b = map_params_to_diameters(p);
    CHECK(std::memcmp(a.data(), b.data(), sizeof(double) * a.size()) == 0);
  }

  TEST_CASE("diameters stay positive over 10^4 random parameter sets") {
    double lowest = 1e9;
    for (std::uint64_t s = 0; s < 10000; ++s) {
      const auto d = map_params_to_diameters(tf_test::random_params(s, 7));
      lowest = std::min(lowest, *std::min_element(d.begin(), d.end()));
    }
    CHECK(lowest > 0.0);
  }

  TEST_CASE("profile resampling keeps the endpoints") {
    const auto r = rest_profile();
    const auto same = resample_profile(r, kTractSections);
    for (std::size_t i = 0; i < kTractSections; ++i) CHECK(same[i] == doctest::Approx(r[i]));
    const auto coarse = resample_profile(r, 12);
    CHECK(coarse.size() == 12);
    CHECK(coarse.front() == doctest::Approx(r.front()));
    CHECK(coarse.back() == doctest::Approx(r.back()));
  }
}

TEST_SUITE("glottal source") {
  TEST_CASE("150 Hz voiced source repeats every 320 samples") {
    const auto g = glottal_source(150.0, 1.0, 9600, CounterRng(1));
    const std::span<const double> tail(g.data() + 960, g.size() - 960);
    CHECK(tf_test::best_lag(tail, 200, 500) == 320);
  }

  TEST_CASE("voiceness 0 has no periodic component") {
    const auto g = glottal_source(150.0, 0.0, 9600, CounterRng(2));
    CHECK(tf_test::autocorr(g, 320) < 0.3);
  }

  TEST_CASE("voiceness 1 is exactly periodic after the onset") {
    const auto g = glottal_source(150.0, 1.0, 48000, CounterRng(3));
    double diff = 0.0;
    const std::size_t start = 4800;
    for (std::size_t i = start; i + 320 < g.size(); ++i) diff += (g[i] - g[i + 320]) * (g[i] - g[i + 320]);
    CHECK(std::sqrt(diff / static_cast<double>(g.size() - start - 320)) < 1e-6);
  }

  TEST_CASE("aspiration gain falls monotonically with voiceness") {
    double prev = 1e9;
    for (int k = 0; k <= 10; ++k) {
      GlottalSource src(48000.0, CounterRng(4));
      src.set_controls(120.0, k / 10.0);
      src.next();
      CHECK(src.noise_gain() < prev);
      prev = src.noise_gain();
    }
    CHECK(prev == 0.0);
  }

  TEST_CASE("new voiceness waits for the next period") {
    GlottalSource src(48000.0, CounterRng(5));
    src.set_controls(100.0, 1.0);
    src.next();
    src.set_controls(100.0, 0.0);
    src.next();
    CHECK(src.noise_gain() == 0.0);
    for (int i = 0; i < 480; ++i) src.next();
    CHECK(src.noise_gain() > 0.0);
  }

  TEST_CASE("LF pulse has a unit negative peak and integrates to about zero") {
    for (double v : {0.2, 0.5, 0.9, 1.0}) {
      const LfShape s = LfShape::from_voiceness(v);
      CHECK(s.tp > 0.0);
      CHECK(s.tp < s.te);
      CHECK(s.te < 1.0);
      CHECK(s(s.te) == doctest::Approx(-1.0).epsilon(1e-6));
      double area = 0.0, peak = 0.0;
      const int n = 20000;
      for (int i = 0; i < n; ++i) {
        const double y = s((i + 0.5) / n);
        area += y / n;
        peak = std::max(peak, std::abs(y));
      }
      CHECK(std::abs(area) < 0.05 * peak);
    }
  }
}

TEST_SUITE("synthesis") {
  TEST_CASE("one second yields 48000 samples") {
    CHECK(synthesize_static(mid_params(), 1.0).size() == 48000);
    CHECK(sample_count(0.5, 48000) == 24000);
    CHECK_THROWS_AS(sample_count(0.0, 48000), std::invalid_argument);
  }

  TEST_CASE("same parameters and seed give bit-identical audio") {
    const TractParams p = tf_test::random_params(21);
    SynthConfig cfg;
    cfg.seed = 99;
    const auto a = synthesize_static(p, 0.3, cfg);
    const auto b = synthesize_static(p, 0.3, cfg);
    REQUIRE(a.size() == b.size());
    CHECK(std::memcmp(a.samples.data(), b.samples.data(), a.size() * sizeof(double)) == 0);
  }

  TEST_CASE("different seeds only change the aspiration noise") {
    const TractParams p = mid_params().with(Param::Voiceness, 0.3);
    SynthConfig c1, c2;
    c1.seed = 1;
    c2.seed = 2;
    CHECK(synthesize_static(p, 0.2, c1).samples != synthesize_static(p, 0.2, c2).samples);
    const TractParams voiced = p.with(Param::Voiceness, 1.0);
    CHECK(synthesize_static(voiced, 0.2, c1).samples == synthesize_static(voiced, 0.2, c2).samples);
  }

  TEST_CASE("voiced 220 Hz output has f0 within 1 percent") {
    const TractParams p = mid_params().with(Param::Pitch, 220.0).with(Param::Voiceness, 1.0);
    const auto clip = synthesize_static(p, 0.5);
    const std::span<const double> tail(clip.samples.data() + 4800, clip.size() - 4800);
    CHECK(tf_test::estimate_f0(tail, 48000.0) == doctest::Approx(220.0).epsilon(0.01));
  }

  TEST_CASE("f0 within 1 percent across the pitch range for voiceness >= 0.8") {
    for (double pitch : {75.0, 100.0, 140.0, 200.0, 260.0, 330.0}) {
      for (double v : {0.8, 0.9, 1.0}) {
        const TractParams p = tf_test::random_params(static_cast<std::uint64_t>(pitch))
                                  .with(Param::Pitch, pitch)
                                  .with(Param::Voiceness, v);
        const auto clip = synthesize_static(p, 0.5);
        const std::span<const double> tail(clip.samples.data() + 4800, clip.size() - 4800);
        const double f0 = tf_test::estimate_f0(tail, 48000.0);
        CAPTURE(pitch);
        CAPTURE(v);
        CHECK(f0 == doctest::Approx(pitch).epsilon(0.01));
      }
    }
  }

  TEST_CASE("output is finite and bounded for random parameters") {
    for (std::uint64_t s = 0; s < 40; ++s) {
      const auto clip = synthesize_static(tf_test::random_params(s, 3), 1.0);
      double peak = 0.0;
      for (double x : clip.samples) {
        REQUIRE(std::isfinite(x));
        peak = std::max(peak, std::abs(x));
      }
      CHECK(peak <= 1.0);
      CHECK(peak > 0.0);
    }
  }

  TEST_CASE("mid-range parameters peak near one half") {
    const auto clip = synthesize_static(mid_params(), 1.0);
    double peak = 0.0;
    for (double x : clip.samples) peak = std::max(peak, std::abs(x));
    CHECK(peak > 0.35);
    CHECK(peak < 0.65);
  }

  TEST_CASE("onset fades in from silence") {
    const auto clip = synthesize_static(mid_params(), 0.1);
    CHECK(clip.samples[0] == 0.0);
    const double early = tf_test::rms(std::span<const double>(clip.samples.data(), 48));
    const double later = tf_test::rms(std::span<const double>(clip.samples.data() + 2400, 480));
    CHECK(early < 0.05 * later);
  }

  TEST_CASE("single-keyframe trajectory equals static synthesis bitwise") {
    const TractParams p = tf_test::random_params(5);
    SynthConfig cfg;
    cfg.seed = 17;
    const auto a = synthesize_static(p, 0.4, cfg);
    const auto b = synthesize_trajectory(ParamTrajectory({{0.0, p}}), 0.4, cfg);
    CHECK(a.samples == b.samples);
  }

  TEST_CASE("identical keyframes equal static synthesis") {
    const TractParams p = tf_test::random_params(6);
    const auto a = synthesize_static(p, 0.4);
    const auto b = synthesize_trajectory(ParamTrajectory({{0.0, p}, {1.0, p}}), 0.4);
    CHECK(a.samples == b.samples);
  }

  TEST_CASE("100 to 200 Hz glide rises monotonically and hits 150 Hz mid-clip") {
    const TractParams base = mid_params().with(Param::Voiceness, 1.0);
    const ParamTrajectory glide({{0.0, base.with(Param::Pitch, 100.0)}, {1.0, base.with(Param::Pitch, 200.0)}});
    const auto clip = synthesize_trajectory(glide, 1.0);
    std::vector<double> track;
    const std::size_t frame = 2400;
    for (std::size_t start = 2400; start + frame <= clip.size(); start += 2400) {
      track.push_back(tf_test::estimate_f0(std::span<const double>(clip.samples.data() + start, frame), 48000.0, 80.0, 260.0));
    }
    for (std::size_t i = 1; i < track.size(); ++i) CHECK(track[i] > track[i - 1]);
    const std::span<const double> mid(clip.samples.data() + 24000 - 1200, 2400);
    CHECK(tf_test::estimate_f0(mid, 48000.0, 80.0, 260.0) == doctest::Approx(150.0).epsilon(0.03));
  }

  TEST_CASE("config validation") {
    SynthConfig c;
    c.tract_sections = 1;
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);
    c = SynthConfig{};
    c.control_block_samples = 0;
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);
    c = SynthConfig{};
    c.sample_rate_hz = 0;
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  }
}

TEST_SUITE("waveguide") {
  TEST_CASE("uniform tube resonates at the quarter-wave frequency") {
    Waveguide wg(kTractSections);
    std::vector<double> uniform(kTractSections, 1.5);
    wg.set_profile(uniform);
    wg.set_profile(uniform);
    const std::size_t n = 1 << 15;
    std::vector<double> h(n);
    for (std::size_t i = 0; i < n; ++i) h[i] = wg.step(i == 0 ? 1.0 : 0.0, 1.0);

    const double rate = 2.0 * 48000.0;  // two passes per output sample
    const double expected = rate / (4.0 * kTractSections);
    // Magnitude response on a fine grid; first local maximum above 100 Hz.
    auto mag = [&](double f) {
      std::complex<double> acc = 0.0;
      const double w = 2.0 * std::numbers::pi * f / rate;
      for (std::size_t i = 0; i < n; ++i) acc += h[i] * std::polar(1.0, -w * static_cast<double>(i));
      return std::abs(acc);
    };
    double first_peak = 0.0;
    double prev2 = mag(100.0), prev1 = mag(105.0);
    for (double f = 110.0; f < 2000.0; f += 5.0) {
      const double cur = mag(f);
      if (prev1 > prev2 && prev1 > cur) {
        first_peak = f - 5.0;
        break;
      }
      prev2 = prev1;
      prev1 = cur;
    }
    CHECK(first_peak == doctest::Approx(expected).epsilon(0.10));
  }

  TEST_CASE("reflection coefficients follow the area ratio") {
    Waveguide wg(4);
    const std::vector<double> d = {1.0, 2.0, 2.0, 1.0};
    wg.set_profile(d);
    const auto k = wg.reflections();
    // k_i = (A_{i-1} - A_i) / (A_{i-1} + A_i) with A = d^2.
    CHECK(k[1] == doctest::Approx((1.0 - 4.0) / 5.0));
    CHECK(k[2] == doctest::Approx(0.0));
    CHECK(k[3] == doctest::Approx((4.0 - 1.0) / 5.0));
  }

  TEST_CASE("impulse response decays") {
    Waveguide wg(kTractSections);
    wg.set_profile(resample_profile(rest_profile(), kTractSections));
    double early = 0.0, late = 0.0;
    for (int i = 0; i < 96000; ++i) {
      const double y = wg.step(i == 0 ? 1.0 : 0.0, 1.0);
      if (i < 4800) early += y * y;
      if (i >= 91200) late += y * y;
    }
    CHECK(late < 1e-6 * early);
  }
}
