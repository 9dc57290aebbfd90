#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>

#include "tractfit/audio_clip.hpp"

namespace tractfit {

enum class WavEncoding { Pcm16, Float32 };

struct WavSpec {
  int sample_rate_hz = kPipelineSampleRate;
  int channels = 1;
  WavEncoding encoding = WavEncoding::Float32;
};

// File could not be opened, read or written.
class WavIoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// File is readable but violates the pipeline's input contract.
class WavFormatError : public std::runtime_error {
 public:
  enum class Property { Container, Channels, SampleRate, Encoding };
  WavFormatError(Property property, const std::string& what) : std::runtime_error(what), property_(property) {}
  Property property() const { return property_; }

 private:
  Property property_;
};

// Header fields of a RIFF/WAVE file, without any contract checks.
WavSpec probe_wav(const std::filesystem::path& path);

// Reads a mono 48 kHz PCM16 or Float32 file. PCM16 is scaled by 1/32768.
AudioClip read_wav(const std::filesystem::path& path);

// Writes the clip with a canonical 44-byte header. PCM16 samples outside
// [-1, 1] are clipped; the return value counts them (always 0 for Float32).
std::size_t write_wav(const std::filesystem::path& path, const AudioClip& clip,
                      WavEncoding encoding = WavEncoding::Float32);

// Mean of x^2 over the whole clip.
double signal_power(const AudioClip& clip);

// Adds white Gaussian noise with power signal_power / 10^(snr_db / 10).
// Throws std::invalid_argument for a silent clip.
AudioClip add_noise_snr(const AudioClip& clip, double snr_db, std::uint64_t seed);

}  // namespace tractfit
