#include <doctest.h>

#include <cmath>
#include <fstream>
#include <numbers>

#include "support.hpp"
#include "tractfit/audio_io.hpp"
#include "tractfit/quality.hpp"
#include "tractfit/vocal_tract.hpp"

using namespace tractfit;

namespace {

// Two seconds of articulated, speech-like audio.
AudioClip utterance() {
  std::vector<Keyframe> keys;
  for (int k = 0; k < 9; ++k) {
    keys.push_back({0.25 * k, tf_test::random_params(100 + k).with(Param::Voiceness, 0.6 + 0.05 * (k % 5))});
  }
  return synthesize_trajectory(ParamTrajectory(std::move(keys)), 2.0);
}

std::filesystem::path write_file(const std::string& name, const std::string& body) {
  const auto dir = tf_test::temp_dir("quality");
  const auto p = dir / name;
  std::ofstream(p) << body;
  return p;
}

}  // namespace

TEST_SUITE("resampling") {
  TEST_CASE("output length is ceil(n * up / down)") {
    const std::vector<double> x(48001, 0.0);
    CHECK(resample_poly(x, 5, 24).size() == 10001);
    CHECK(resample_poly(std::vector<double>(480, 0.0), 5, 24).size() == 100);
    CHECK(resample_poly(std::vector<double>(7, 0.0), 2, 1).size() == 14);
  }

  TEST_CASE("passband sine keeps its amplitude and frequency") {
    std::vector<double> x(48000);
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = std::sin(2.0 * std::numbers::pi * 500.0 * i / 48000.0);
    const auto y = resample_poly(x, 5, 24);
    double err = 0.0;
    for (std::size_t i = 1000; i < 9000; ++i) {
      err = std::max(err, std::abs(y[i] - std::sin(2.0 * std::numbers::pi * 500.0 * i / 10000.0)));
    }
    CHECK(err < 0.01);
  }

  TEST_CASE("content above the new Nyquist is rejected") {
    std::vector<double> x(48000);
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = std::sin(2.0 * std::numbers::pi * 9000.0 * i / 48000.0);
    const auto y = resample_poly(x, 5, 24);
    CHECK(tf_test::rms(std::span<const double>(y).subspan(1000, 8000)) < 0.01);
  }
}

TEST_SUITE("stoi") {
  TEST_CASE("identical clips score at least 0.99") {
    const AudioClip x = utterance();
    const double s = stoi(x, x).value;
    CHECK(s >= 0.99);
    CHECK(s <= 1.0);
  }

  TEST_CASE("intelligibility falls as noise rises") {
    const AudioClip x = utterance();
    const double s20 = stoi(x, add_noise_snr(x, 20.0, 1)).value;
    const double s10 = stoi(x, add_noise_snr(x, 10.0, 1)).value;
    const double s0 = stoi(x, add_noise_snr(x, 0.0, 1)).value;
    CHECK(s20 > s10);
    CHECK(s10 > s0);
  }

  TEST_CASE("scaling the degraded clip does not change the score") {
    const AudioClip x = utterance();
    AudioClip y = add_noise_snr(x, 5.0, 2);
    const double base = stoi(x, y).value;
    for (double& v : y.samples) v *= 0.37;
    CHECK(stoi(x, y).value == doctest::Approx(base).epsilon(1e-6));
  }

  TEST_CASE("appended silence is ignored") {
    const AudioClip x = utterance();
    const AudioClip y = add_noise_snr(x, 10.0, 3);
    const double base = stoi(x, y).value;
    AudioClip xs = x, ys = y;
    xs.samples.resize(x.size() + 48000, 0.0);
    ys.samples.resize(y.size() + 48000, 0.0);
    CHECK(std::abs(stoi(xs, ys).value - base) < 0.01);
  }

  TEST_CASE("score carries metric and source") {
    const AudioClip x = utterance();
    const QualityScore q = stoi(x, x);
    CHECK(q.metric == Metric::Stoi);
    CHECK(q.source == ScoreSource::Internal);
  }

  TEST_CASE("invalid inputs are rejected") {
    const AudioClip x = utterance();
    AudioClip shorter = x.slice(0, x.size() - 10);
    CHECK_THROWS_AS(stoi(x, shorter), std::invalid_argument);
    AudioClip other_rate = x;
    other_rate.sample_rate_hz = 44100;
    CHECK_THROWS_AS(stoi(x, other_rate), std::invalid_argument);
    AudioClip silent = x;
    std::fill(silent.samples.begin(), silent.samples.end(), 0.0);
    CHECK_THROWS_AS(stoi(silent, x), std::invalid_argument);
    const AudioClip tiny = x.slice(0, 9600);
    CHECK_THROWS_AS(stoi(tiny, tiny), std::invalid_argument);
  }
}

TEST_SUITE("metrics") {
  TEST_CASE("names are case-insensitive") {
    CHECK(metric_from_string("stoi") == Metric::Stoi);
    CHECK(metric_from_string("PESQ") == Metric::Pesq);
    CHECK(metric_from_string("Peaq") == Metric::Peaq);
    CHECK(metric_from_string("visqol") == Metric::Visqol);
    CHECK_FALSE(metric_from_string("snr").has_value());
  }

  TEST_CASE("ranges") {
    CHECK(metric_range(Metric::Stoi) == std::pair{0.0, 1.0});
    CHECK(metric_range(Metric::Pesq) == std::pair{1.0, 5.0});
    CHECK(metric_range(Metric::Visqol) == std::pair{1.0, 5.0});
  }
}

TEST_SUITE("score import") {
  TEST_CASE("rows with a header") {
    const auto p = write_file("ok.csv", "metric,clip_id,value\nPESQ,clip_000,3.2\nvisqol,clip_001,4.5\nSTOI,clip_002,0.8\n");
    const auto s = import_scores(p);
    REQUIRE(s.size() == 3);
    CHECK(s[0].metric == Metric::Pesq);
    CHECK(s[0].clip_id == "clip_000");
    CHECK(s[0].value == 3.2);
    CHECK(s[0].source == ScoreSource::Imported);
    CHECK(s[1].metric == Metric::Visqol);
    CHECK(s[2].value == 0.8);
  }

  TEST_CASE("header is optional and blank lines are skipped") {
    const auto p = write_file("nohdr.csv", "peaq,a,2.0\n\npesq,b,1.0\n");
    CHECK(import_scores(p).size() == 2);
  }

  TEST_CASE("unknown metrics name the offending line") {
    const auto p = write_file("bad.csv", "metric,clip_id,value\nMOS,clip_000,3.0\n");
    try {
      import_scores(p);
      FAIL("expected an exception");
    } catch (const std::runtime_error& e) {
      CHECK(std::string(e.what()).find("bad.csv:2") != std::string::npos);
    }
  }

  TEST_CASE("out-of-range and malformed values are rejected") {
    CHECK_THROWS_AS(import_scores(write_file("r1.csv", "pesq,a,5.5\n")), std::runtime_error);
    CHECK_THROWS_AS(import_scores(write_file("r2.csv", "stoi,a,1.2\n")), std::runtime_error);
    CHECK_THROWS_AS(import_scores(write_file("r3.csv", "pesq,a,abc\n")), std::runtime_error);
    CHECK_THROWS_AS(import_scores(write_file("r4.csv", "pesq,a\n")), std::runtime_error);
    CHECK_THROWS_AS(import_scores(write_file("r5.csv", "pesq,a,nan\n")), std::runtime_error);
  }

  TEST_CASE("missing file") {
    CHECK_THROWS_AS(import_scores("/nonexistent/scores.csv"), std::runtime_error);
  }
}
