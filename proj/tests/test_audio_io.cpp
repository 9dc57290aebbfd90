#include <doctest.h>

#include <cmath>
#include <cstring>
#include <fstream>

#include "support.hpp"
#include "tractfit/audio_io.hpp"
#include "tractfit/vocal_tract.hpp"

using namespace tractfit;

namespace {

const std::filesystem::path& dir() {
  static const auto d = tf_test::temp_dir("audio_io");
  return d;
}

std::vector<char> bytes_of(const std::filesystem::path& p) {
  std::ifstream f(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

template <typename T>
void put(std::vector<char>& out, T v) {
  const char* p = reinterpret_cast<const char*>(&v);
  out.insert(out.end(), p, p + sizeof(T));
}

// Hand-built RIFF/WAVE file.
std::filesystem::path raw_wav(const std::string& name, std::uint16_t format, std::uint16_t channels,
                              std::uint32_t rate, std::uint16_t bits, const std::vector<char>& data) {
  std::vector<char> b;
  b.insert(b.end(), {'R', 'I', 'F', 'F'});
  put<std::uint32_t>(b, static_cast<std::uint32_t>(36 + data.size()));
  b.insert(b.end(), {'W', 'A', 'V', 'E', 'f', 'm', 't', ' '});
  put<std::uint32_t>(b, 16);
  put<std::uint16_t>(b, format);
  put<std::uint16_t>(b, channels);
  put<std::uint32_t>(b, rate);
  put<std::uint32_t>(b, rate * channels * bits / 8);
  put<std::uint16_t>(b, static_cast<std::uint16_t>(channels * bits / 8));
  put<std::uint16_t>(b, bits);
  b.insert(b.end(), {'d', 'a', 't', 'a'});
  put<std::uint32_t>(b, static_cast<std::uint32_t>(data.size()));
  b.insert(b.end(), data.begin(), data.end());
  const auto p = dir() / name;
  std::ofstream(p, std::ios::binary).write(b.data(), static_cast<std::streamsize>(b.size()));
  return p;
}

std::vector<char> pcm16(std::initializer_list<std::int16_t> v) {
  std::vector<char> out;
  for (auto s : v) put(out, s);
  return out;
}

WavFormatError::Property format_error(const std::filesystem::path& p) {
  try {
    read_wav(p);
  } catch (const WavFormatError& e) {
    return e.property();
  }
  FAIL("expected a format error");
  return WavFormatError::Property::Container;
}

}  // namespace

TEST_SUITE("wav") {
  TEST_CASE("Float32 round-trip is exact for float-representable samples") {
    AudioClip c = synthesize_static(tf_test::random_params(1), 0.1);
    for (double& v : c.samples) v = static_cast<float>(v);
    const auto p = dir() / "roundtrip.wav";
    CHECK(write_wav(p, c) == 0);
    const AudioClip back = read_wav(p);
    CHECK(back.sample_rate_hz == 48000);
    CHECK(back.samples == c.samples);
  }

  TEST_CASE("PCM16 round-trip is within half a quantization step") {
    const AudioClip c = synthesize_static(tf_test::random_params(2), 0.1);
    const auto p = dir() / "pcm.wav";
    write_wav(p, c, WavEncoding::Pcm16);
    const AudioClip back = read_wav(p);
    REQUIRE(back.size() == c.size());
    for (std::size_t i = 0; i < c.size(); ++i) CHECK(std::abs(back.samples[i] - c.samples[i]) <= 0.5 / 32768.0 + 1e-15);
    CHECK(probe_wav(p).encoding == WavEncoding::Pcm16);
  }

  TEST_CASE("PCM16 full-scale negative reads as -1") {
    const auto p = raw_wav("neg.wav", 1, 1, 48000, 16, pcm16({-32768, 0, 16384, 32767}));
    const AudioClip c = read_wav(p);
    REQUIRE(c.size() == 4);
    CHECK(c.samples[0] == -1.0);
    CHECK(c.samples[1] == 0.0);
    CHECK(c.samples[2] == 0.5);
    CHECK(c.samples[3] == 32767.0 / 32768.0);
  }

  TEST_CASE("one second of Float32 has a 192000-byte data chunk") {
    AudioClip c;
    c.samples.assign(48000, 0.25);
    const auto p = dir() / "len.wav";
    write_wav(p, c);
    const auto b = bytes_of(p);
    REQUIRE(b.size() == 44 + 192000);
    CHECK(std::memcmp(b.data() + 36, "data", 4) == 0);
    std::uint32_t len = 0;
    std::memcpy(&len, b.data() + 40, 4);
    CHECK(len == 192000);
    std::uint16_t fmt = 0;
    std::memcpy(&fmt, b.data() + 20, 2);
    CHECK(fmt == 3);
  }

  TEST_CASE("PCM16 clips out-of-range samples and counts them") {
    AudioClip c;
    c.samples = {1.5, 0.0, 1.0, -1.0, -2.0};
    const auto p = dir() / "clip.wav";
    CHECK(write_wav(p, c, WavEncoding::Pcm16) == 2);
    const auto b = bytes_of(p);
    std::int16_t s[5];
    std::memcpy(s, b.data() + 44, sizeof s);
    CHECK(s[0] == 32767);
    CHECK(s[2] == 32767);
    CHECK(s[3] == -32768);
    CHECK(s[4] == -32768);
    AudioClip one;
    one.samples = {1.5};
    CHECK(write_wav(dir() / "one.wav", one, WavEncoding::Pcm16) == 1);
  }

  TEST_CASE("an empty clip writes a header-only file") {
    const auto p = dir() / "empty.wav";
    write_wav(p, AudioClip{});
    CHECK(std::filesystem::file_size(p) == 44);
    CHECK(read_wav(p).size() == 0);
  }

  TEST_CASE("stereo input is rejected as a channel error") {
    const auto p = raw_wav("stereo.wav", 1, 2, 48000, 16, pcm16({1, 2, 3, 4}));
    CHECK(format_error(p) == WavFormatError::Property::Channels);
    CHECK(probe_wav(p).channels == 2);
  }

  TEST_CASE("wrong rate and encoding are reported") {
    CHECK(format_error(raw_wav("rate.wav", 1, 1, 44100, 16, pcm16({1, 2}))) == WavFormatError::Property::SampleRate);
    CHECK(format_error(raw_wav("pcm24.wav", 1, 1, 48000, 24, std::vector<char>(6, 0))) ==
          WavFormatError::Property::Encoding);
  }

  TEST_CASE("non-RIFF files and missing files") {
    const auto p = dir() / "junk.wav";
    std::ofstream(p) << "this is not audio at all, definitely not a wave file";
    CHECK(format_error(p) == WavFormatError::Property::Container);
    CHECK_THROWS_AS(read_wav(dir() / "missing.wav"), WavIoError);
    CHECK_THROWS_AS(write_wav("/nonexistent/dir/x.wav", AudioClip{}), WavIoError);
  }
}

TEST_SUITE("noise") {
  TEST_CASE("signal power is the mean square") {
    AudioClip c;
    c.samples = {1.0, -1.0, 0.0, 2.0};
    CHECK(signal_power(c) == doctest::Approx(1.5));
  }

  TEST_CASE("added noise hits the requested SNR") {
    const AudioClip c = synthesize_static(tf_test::random_params(3), 1.0);
    const double ps = signal_power(c);
    for (double snr : {40.0, 20.0, 10.0, 0.0}) {
      const AudioClip y = add_noise_snr(c, snr, 7);
      double pn = 0.0;
      for (std::size_t i = 0; i < c.size(); ++i) pn += (y.samples[i] - c.samples[i]) * (y.samples[i] - c.samples[i]);
      pn /= static_cast<double>(c.size());
      CHECK(pn == doctest::Approx(ps / std::pow(10.0, snr / 10.0)).epsilon(0.02));
      CHECK(std::abs(10.0 * std::log10(ps / pn) - snr) < 0.2);
    }
  }

  TEST_CASE("noise streams from different seeds are uncorrelated") {
    const AudioClip c = synthesize_static(tf_test::random_params(4), 1.0);
    const AudioClip a = add_noise_snr(c, 10.0, 1);
    const AudioClip b = add_noise_snr(c, 10.0, 2);
    double sab = 0.0, saa = 0.0, sbb = 0.0;
    for (std::size_t i = 0; i < c.size(); ++i) {
      const double na = a.samples[i] - c.samples[i];
      const double nb = b.samples[i] - c.samples[i];
      sab += na * nb;
      saa += na * na;
      sbb += nb * nb;
    }
    CHECK(std::abs(sab / std::sqrt(saa * sbb)) < 0.05);
    CHECK(add_noise_snr(c, 10.0, 1).samples == a.samples);
  }

  TEST_CASE("silence and non-finite SNR are rejected") {
    AudioClip z;
    z.samples.assign(100, 0.0);
    CHECK_THROWS_AS(add_noise_snr(z, 10.0, 1), std::invalid_argument);
    const AudioClip c = synthesize_static(tf_test::random_params(5), 0.1);
    CHECK_THROWS_AS(add_noise_snr(c, std::nan(""), 1), std::invalid_argument);
  }
}
