#include "tractfit/audio_io.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <optional>
#include <vector>

#include "tractfit/rng.hpp"

namespace tractfit {

static_assert(std::endian::native == std::endian::little, "WAV I/O assumes a little-endian host");

namespace {

constexpr std::uint16_t kFormatPcm = 1;
constexpr std::uint16_t kFormatFloat = 3;
constexpr std::uint16_t kFormatExtensible = 0xFFFE;

template <typename T>
T load(const std::uint8_t* p) {
  T v;
  std::memcpy(&v, p, sizeof(T));
  return v;
}

template <typename T>
void store(std::vector<std::uint8_t>& out, T v) {
  std::uint8_t b[sizeof(T)];
  std::memcpy(b, &v, sizeof(T));
  out.insert(out.end(), b, b + sizeof(T));
}

void store_tag(std::vector<std::uint8_t>& out, const char (&tag)[5]) { out.insert(out.end(), tag, tag + 4); }

struct Parsed {
  std::uint16_t format = 0;
  std::uint16_t channels = 0;
  std::uint32_t rate = 0;
  std::uint16_t bits = 0;
  std::vector<std::uint8_t> data;
};

std::vector<std::uint8_t> slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw WavIoError("cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw WavIoError("read failed for " + path.string());
  return bytes;
}

Parsed parse(const std::filesystem::path& path) {
  const auto bytes = slurp(path);
  using P = WavFormatError::Property;
  const std::string where = path.string() + ": ";
  if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 || std::memcmp(bytes.data() + 8, "WAVE", 4) != 0) {
    throw WavFormatError(P::Container, where + "not a RIFF/WAVE file");
  }
  Parsed p;
  bool have_fmt = false, have_data = false;
  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const std::uint8_t* chunk = bytes.data() + pos;
    const std::uint32_t size = load<std::uint32_t>(chunk + 4);
    const std::size_t body = pos + 8;
    const std::size_t avail = std::min<std::size_t>(size, bytes.size() - body);
    if (std::memcmp(chunk, "fmt ", 4) == 0) {
      if (avail < 16) throw WavFormatError(P::Container, where + "truncated fmt chunk");
      p.format = load<std::uint16_t>(bytes.data() + body);
      p.channels = load<std::uint16_t>(bytes.data() + body + 2);
      p.rate = load<std::uint32_t>(bytes.data() + body + 4);
      p.bits = load<std::uint16_t>(bytes.data() + body + 14);
      if (p.format == kFormatExtensible && avail >= 26) p.format = load<std::uint16_t>(bytes.data() + body + 24);
      have_fmt = true;
    } else if (std::memcmp(chunk, "data", 4) == 0) {
      p.data.assign(bytes.begin() + static_cast<std::ptrdiff_t>(body),
                    bytes.begin() + static_cast<std::ptrdiff_t>(body + avail));
      have_data = true;
    }
    pos = body + size + (size & 1u);
  }
  if (!have_fmt) throw WavFormatError(P::Container, where + "missing fmt chunk");
  if (!have_data) throw WavFormatError(P::Container, where + "missing data chunk");
  return p;
}

std::optional<WavEncoding> encoding_of(std::uint16_t format, std::uint16_t bits) {
  if (format == kFormatPcm && bits == 16) return WavEncoding::Pcm16;
  if (format == kFormatFloat && bits == 32) return WavEncoding::Float32;
  return std::nullopt;
}

}  // namespace

WavSpec probe_wav(const std::filesystem::path& path) {
  const Parsed p = parse(path);
  const auto enc = encoding_of(p.format, p.bits);
  if (!enc) {
    throw WavFormatError(WavFormatError::Property::Encoding,
                         path.string() + ": unsupported encoding (format " + std::to_string(p.format) + ", " +
                             std::to_string(p.bits) + " bits)");
  }
  return {static_cast<int>(p.rate), p.channels, *enc};
}

AudioClip read_wav(const std::filesystem::path& path) {
  using P = WavFormatError::Property;
  const Parsed p = parse(path);
  const std::string where = path.string() + ": ";
  if (p.channels != 1) throw WavFormatError(P::Channels, where + "expected 1 channel, got " + std::to_string(p.channels));
  if (p.rate != static_cast<std::uint32_t>(kPipelineSampleRate)) {
    throw WavFormatError(P::SampleRate, where + "expected 48000 Hz, got " + std::to_string(p.rate));
  }
  const auto enc = encoding_of(p.format, p.bits);
  if (!enc) {
    throw WavFormatError(P::Encoding, where + "unsupported encoding (format " + std::to_string(p.format) + ", " +
                                          std::to_string(p.bits) + " bits); expected PCM16 or Float32");
  }
  AudioClip clip;
  clip.sample_rate_hz = kPipelineSampleRate;
  if (*enc == WavEncoding::Pcm16) {
    clip.samples.resize(p.data.size() / 2);
    for (std::size_t i = 0; i < clip.samples.size(); ++i) {
      clip.samples[i] = load<std::int16_t>(p.data.data() + 2 * i) / 32768.0;
    }
  } else {
    clip.samples.resize(p.data.size() / 4);
    for (std::size_t i = 0; i < clip.samples.size(); ++i) clip.samples[i] = load<float>(p.data.data() + 4 * i);
  }
  require_finite(clip);
  return clip;
}

std::size_t write_wav(const std::filesystem::path& path, const AudioClip& clip, WavEncoding encoding) {
  require_finite(clip);
  const bool pcm = encoding == WavEncoding::Pcm16;
  const std::uint16_t bits = pcm ? 16 : 32;
  const std::uint16_t block = bits / 8;
  const auto data_bytes = static_cast<std::uint32_t>(clip.size() * block);

  std::vector<std::uint8_t> out;
  out.reserve(44 + data_bytes);
  store_tag(out, "RIFF");
  store<std::uint32_t>(out, 36 + data_bytes);
  store_tag(out, "WAVE");
  store_tag(out, "fmt ");
  store<std::uint32_t>(out, 16);
  store<std::uint16_t>(out, pcm ? kFormatPcm : kFormatFloat);
  store<std::uint16_t>(out, 1);
  store<std::uint32_t>(out, static_cast<std::uint32_t>(clip.sample_rate_hz));
  store<std::uint32_t>(out, static_cast<std::uint32_t>(clip.sample_rate_hz) * block);
  store<std::uint16_t>(out, block);
  store<std::uint16_t>(out, bits);
  store_tag(out, "data");
  store<std::uint32_t>(out, data_bytes);

  std::size_t clipped = 0;
  for (double x : clip.samples) {
    if (pcm) {
      if (x > 1.0 || x < -1.0) ++clipped;
      const double scaled = std::clamp(std::round(x * 32768.0), -32768.0, 32767.0);
      store<std::int16_t>(out, static_cast<std::int16_t>(scaled));
    } else {
      store<float>(out, static_cast<float>(x));
    }
  }

  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw WavIoError("cannot open " + path.string() + " for writing");
  f.write(reinterpret_cast<const char*>(out.data()), static_cast<std::streamsize>(out.size()));
  if (!f) throw WavIoError("write failed for " + path.string());
  return clipped;
}

double signal_power(const AudioClip& clip) {
  if (clip.samples.empty()) return 0.0;
  double s = 0.0;
  for (double x : clip.samples) s += x * x;
  return s / static_cast<double>(clip.size());
}

AudioClip add_noise_snr(const AudioClip& clip, double snr_db, std::uint64_t seed) {
  if (!std::isfinite(snr_db)) throw std::invalid_argument("SNR must be finite");
  const double p = signal_power(clip);
  if (!(p > 0.0)) throw std::invalid_argument("cannot set an SNR on a silent clip");
  const double sigma = std::sqrt(p / std::pow(10.0, snr_db / 10.0));
  CounterRng rng(seed, hash_string("white-noise"));
  AudioClip out = clip;
  for (double& x : out.samples) x += sigma * rng.gaussian();
  return out;
}

}  // namespace tractfit
