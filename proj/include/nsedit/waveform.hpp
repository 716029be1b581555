#ifndef NSEDIT_WAVEFORM_HPP
#define NSEDIT_WAVEFORM_HPP

#include <cstddef>
#include <string>
#include <vector>

namespace nsedit {

// Mono audio signal. Samples are dimensionless amplitudes, nominally in
// [-1, 1]; the container itself never clips.
struct Waveform {
  std::vector<double> samples;
  int sample_rate = 16000;

  Waveform() = default;
  Waveform(std::vector<double> s, int rate) : samples(std::move(s)), sample_rate(rate) {}

  std::size_t size() const { return samples.size(); }
  bool empty() const { return samples.empty(); }
  double duration_s() const {
    return sample_rate > 0 ? static_cast<double>(samples.size()) / sample_rate : 0.0;
  }
};

// Throws InvalidArgument if the sample rate is nonpositive or any sample is
// NaN/Inf.
void validate(const Waveform& w, const char* context);

double rms(const Waveform& w);

enum class WavEncoding { pcm16, float32 };

// RIFF/WAVE reader. Accepts PCM16 and IEEE float32, mono or multichannel;
// channels are averaged down to mono.
Waveform read_wav(const std::string& path);

// Writes a mono RIFF/WAVE file. pcm16 clips to [-1, 1] before quantizing;
// float32 is lossless for float-valued samples.
void write_wav(const Waveform& w, const std::string& path,
               WavEncoding encoding = WavEncoding::float32);

// Rounds every sample to the nearest IEEE float32. Stage outputs pass
// through this so that an in-process pipeline run matches a run chained
// through intermediate WAV files bit for bit.
Waveform quantize_float32(const Waveform& w);

}  // namespace nsedit

#endif
