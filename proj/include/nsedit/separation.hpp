#ifndef NSEDIT_SEPARATION_HPP
#define NSEDIT_SEPARATION_HPP

#include <map>
#include <optional>
#include <string>

#include "nsedit/waveform.hpp"

namespace nsedit {

struct SeparationResult {
  Waveform speech;  // X_s
  Waveform noise;   // X_n, always exactly input - speech
};

enum class SeparatorKind { oracle, spectral_subtraction, external };

SeparatorKind separator_kind_from_string(const std::string& s);

// kind-specific parameters:
//   oracle:               reference (path) or a preloaded reference waveform
//   spectral_subtraction: percentile, oversubtraction, frame_length, hop_length
//   external:             command (with {input} {speech_out} {noise_out}),
//                         timeout_s, workdir
struct SeparatorSpec {
  SeparatorKind kind = SeparatorKind::spectral_subtraction;
  std::map<std::string, std::string> parameters;
  std::optional<Waveform> oracle_reference;  // set to skip re-reading the file

  static SeparatorSpec oracle_with(Waveform reference);
  static SeparatorSpec spectral(double percentile = 20.0, double oversubtraction = 1.5);
};

// STFT-domain magnitude subtraction. The per-bin noise floor is the given
// percentile of that bin's frame magnitudes; output magnitude is
// max(|S| - oversubtraction * floor, 0.05 * |S|) with the input phase.
Waveform spectral_subtract(const Waveform& x, double noise_floor_percentile,
                           double oversubtraction, std::size_t frame_length = 1024,
                           std::size_t hop_length = 256);

// Runs the configured backend, then replaces the backend's noise with
// x - speech so speech + noise == x holds exactly.
SeparationResult separate(const Waveform& x, const SeparatorSpec& spec);

}  // namespace nsedit

#endif
