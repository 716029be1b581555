#include "nsedit/separation.hpp"

#include <unistd.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <mutex>
#include <vector>

#include "nsedit/edit.hpp"
#include "nsedit/errors.hpp"
#include "nsedit/spectral.hpp"

namespace nsedit {

SeparatorKind separator_kind_from_string(const std::string& s) {
  if (s == "oracle") return SeparatorKind::oracle;
  if (s == "spectral_subtraction") return SeparatorKind::spectral_subtraction;
  if (s == "external") return SeparatorKind::external;
  throw Error(Errc::invalid_argument, "unknown separator kind: " + s);
}

SeparatorSpec SeparatorSpec::oracle_with(Waveform reference) {
  SeparatorSpec spec;
  spec.kind = SeparatorKind::oracle;
  spec.oracle_reference = std::move(reference);
  return spec;
}

SeparatorSpec SeparatorSpec::spectral(double percentile, double oversubtraction) {
  SeparatorSpec spec;
  spec.kind = SeparatorKind::spectral_subtraction;
  spec.parameters["percentile"] = std::to_string(percentile);
  spec.parameters["oversubtraction"] = std::to_string(oversubtraction);
  return spec;
}

namespace {

double param_or(const std::map<std::string, std::string>& params, const std::string& key,
                double fallback) {
  auto it = params.find(key);
  if (it == params.end()) return fallback;
  try {
    return std::stod(it->second);
  } catch (const std::exception&) {
    throw Error(Errc::invalid_argument, "separator parameter " + key + " is not a number");
  }
}

// linear-interpolated percentile of a scratch vector (sorted in place)
double percentile_of(std::vector<double>& v, double pct) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const double pos = pct / 100.0 * static_cast<double>(v.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(pos);
  const std::size_t hi = std::min(lo + 1, v.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return v[lo] * (1.0 - frac) + v[hi] * frac;
}

constexpr double kSpectralFloor = 0.05;

}  // namespace

Waveform spectral_subtract(const Waveform& x, double noise_floor_percentile,
                           double oversubtraction, std::size_t frame_length,
                           std::size_t hop_length) {
  validate(x, "spectral_subtract");
  if (noise_floor_percentile <= 0.0 || noise_floor_percentile >= 100.0) {
    throw Error(Errc::invalid_argument, "spectral_subtract: percentile must be in (0, 100)");
  }
  if (oversubtraction < 1.0) {
    throw Error(Errc::invalid_argument, "spectral_subtract: oversubtraction must be >= 1");
  }
  if (x.samples.size() < frame_length) {
    throw Error(Errc::signal_too_short, "spectral_subtract: input shorter than one frame");
  }

  // zero-pad a whole frame each side so every real sample has full window
  // coverage in the overlap-add; magnitude edits at partially covered edges
  // would otherwise be amplified by the normalization
  const std::size_t pad = ((frame_length + hop_length - 1) / hop_length) * hop_length;
  Waveform padded;
  padded.sample_rate = x.sample_rate;
  padded.samples.assign(x.samples.size() + 2 * pad, 0.0);
  std::copy(x.samples.begin(), x.samples.end(),
            padded.samples.begin() + static_cast<std::ptrdiff_t>(pad));

  Spectrogram s = stft(padded, frame_length, hop_length);
  const std::size_t frames = s.frames(), bins = s.bins();

  std::vector<double> column(frames);
  for (std::size_t b = 0; b < bins; ++b) {
    for (std::size_t t = 0; t < frames; ++t) {
      column[t] = s.magnitudes(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(b));
    }
    const double floor = percentile_of(column, noise_floor_percentile);
    for (std::size_t t = 0; t < frames; ++t) {
      const Eigen::Index ti = static_cast<Eigen::Index>(t), bi = static_cast<Eigen::Index>(b);
      const double mag = s.magnitudes(ti, bi);
      s.magnitudes(ti, bi) = std::max(mag - oversubtraction * floor, kSpectralFloor * mag);
    }
  }

  Waveform y = istft(s);
  std::vector<double> cropped(x.samples.size());
  for (std::size_t i = 0; i < cropped.size(); ++i) cropped[i] = y.samples[pad + i];
  return Waveform(std::move(cropped), x.sample_rate);
}

namespace {

SeparationResult oracle_separate(const Waveform& x, const SeparatorSpec& spec) {
  Waveform reference;
  if (spec.oracle_reference) {
    reference = *spec.oracle_reference;
  } else {
    auto it = spec.parameters.find("reference");
    if (it == spec.parameters.end()) {
      throw Error(Errc::invalid_argument, "oracle separator needs a reference");
    }
    reference = read_wav(it->second);
  }
  if (reference.samples.size() != x.samples.size()) {
    throw Error(Errc::reference_mismatch, "oracle reference length differs from input");
  }
  if (reference.sample_rate != x.sample_rate) {
    throw Error(Errc::reference_mismatch, "oracle reference sample rate differs from input");
  }
  SeparationResult r;
  r.speech = reference;
  return r;
}

std::mutex external_separator_mutex;

SeparationResult external_separate(const Waveform& x, const SeparatorSpec& spec) {
  namespace fs = std::filesystem;
  auto it = spec.parameters.find("command");
  if (it == spec.parameters.end()) {
    throw Error(Errc::invalid_argument, "external separator needs a command");
  }
  const double timeout = param_or(spec.parameters, "timeout_s", 600.0);
  std::string workdir;
  if (auto w = spec.parameters.find("workdir"); w != spec.parameters.end()) workdir = w->second;

  // one subprocess at a time per process; keeps load bounded
  std::lock_guard<std::mutex> lock(external_separator_mutex);

  static std::atomic<unsigned> counter{0};
  const fs::path dir = fs::temp_directory_path() /
                       ("nsedit_sep_" + std::to_string(::getpid()) + "_" +
                        std::to_string(counter.fetch_add(1)));
  fs::create_directories(dir);
  const fs::path in_path = dir / "input.wav";
  const fs::path speech_path = dir / "speech.wav";
  const fs::path noise_path = dir / "noise.wav";
  write_wav(x, in_path.string(), WavEncoding::float32);

  const std::map<std::string, std::string> vars = {
      {"input", fs::absolute(in_path).string()},
      {"speech_out", fs::absolute(speech_path).string()},
      {"noise_out", fs::absolute(noise_path).string()},
  };
  const int code = run_external_command(it->second, vars, timeout, workdir);
  if (code != 0) {
    throw Error(Errc::backend_failure,
                "external separator exited with code " + std::to_string(code));
  }
  if (!fs::exists(speech_path)) {
    throw Error(Errc::backend_failure, "external separator produced no speech file");
  }
  SeparationResult r;
  r.speech = read_wav(speech_path.string());
  fs::remove_all(dir);
  if (r.speech.samples.size() != x.samples.size()) {
    throw Error(Errc::backend_failure, "external separator changed the signal length");
  }
  return r;
}

}  // namespace

SeparationResult separate(const Waveform& x, const SeparatorSpec& spec) {
  validate(x, "separate");
  SeparationResult r;
  switch (spec.kind) {
    case SeparatorKind::oracle:
      r = oracle_separate(x, spec);
      break;
    case SeparatorKind::spectral_subtraction: {
      const double pct = param_or(spec.parameters, "percentile", 20.0);
      const double over = param_or(spec.parameters, "oversubtraction", 1.5);
      const std::size_t frame =
          static_cast<std::size_t>(param_or(spec.parameters, "frame_length", 1024.0));
      const std::size_t hop =
          static_cast<std::size_t>(param_or(spec.parameters, "hop_length", 256.0));
      // float32-valued speech keeps the residual subtraction below exact in
      // double, so speech + noise reproduces x bit for bit
      r.speech = quantize_float32(spectral_subtract(x, pct, over, frame, hop));
      break;
    }
    case SeparatorKind::external:
      r = external_separate(x, spec);
      break;
  }

  // complement rule: the noise track is defined as the exact residual
  r.speech.sample_rate = x.sample_rate;
  r.noise.sample_rate = x.sample_rate;
  r.noise.samples.resize(x.samples.size());
  for (std::size_t i = 0; i < x.samples.size(); ++i) {
    r.noise.samples[i] = x.samples[i] - r.speech.samples[i];
  }
  return r;
}

}  // namespace nsedit
