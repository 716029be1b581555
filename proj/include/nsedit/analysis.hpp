#ifndef NSEDIT_ANALYSIS_HPP
#define NSEDIT_ANALYSIS_HPP

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "nsedit/spectral.hpp"
#include "nsedit/waveform.hpp"

namespace nsedit {

// Magnitude-weighted spectral moments. Frames below the energy floor report
// the 0 sentinel and are excluded from utterance means.
struct SpectralStats {
  std::vector<double> centroid_hz;   // per frame
  std::vector<double> bandwidth_hz;  // per frame
  double centroid_mean_hz = 0.0;     // over frames above the floor
  double bandwidth_mean_hz = 0.0;
};

// Per frame: sum f_b |S_b| / sum |S_b|; 0 when the frame magnitude sum is
// below 1e-10.
std::vector<double> spectral_centroid(const Spectrogram& s);

// Per frame: sqrt(sum (f_b - centroid)^2 |S_b| / sum |S_b|); 0 for silent
// frames.
std::vector<double> spectral_bandwidth(const Spectrogram& s);

SpectralStats spectral_stats(const Spectrogram& s);

// 10 log10(sum ref^2 / sum (test - ref)^2), capped at 120 dB for exact
// matches. Lengths and rates must agree.
double snr_db(const Waveform& test, const Waveform& reference);

// Spectral-flux seam score: Euclidean distance between the mean log-mel
// vectors of the windows left and right of the boundary, normalized by the
// utterance's mean inter-frame flux.
double boundary_discontinuity(const Waveform& w, std::size_t boundary, double window_ms,
                              std::size_t frame_length = 1024, std::size_t hop_length = 256,
                              int mel_bands = 80);

struct StageMetrics {
  SpectralStats stats;
  std::optional<double> snr_db;
  std::optional<double> boundary_discontinuity;
};

struct MetricReport {
  std::map<std::string, StageMetrics> stages;
  std::string config_hash;
  std::string timestamp;  // informational only, excluded from hashing

  // key/value tree document
  void write_text(const std::string& path) const;
  // flat rows: stage,metric,frame_index,value (utterance values use -1)
  void write_csv(const std::string& path) const;
};

}  // namespace nsedit

#endif
