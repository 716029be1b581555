#include "nsedit/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>

#include "nsedit/errors.hpp"

namespace nsedit {

namespace {

constexpr double kSilenceFloor = 1e-10;
constexpr double kSnrCapDb = 120.0;

}  // namespace

std::vector<double> spectral_centroid(const Spectrogram& s) {
  const std::size_t frames = s.frames(), bins = s.bins();
  std::vector<double> out(frames, 0.0);
  for (std::size_t t = 0; t < frames; ++t) {
    double num = 0.0, den = 0.0;
    for (std::size_t b = 0; b < bins; ++b) {
      const double mag = s.magnitudes(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(b));
      num += s.bin_frequency(b) * mag;
      den += mag;
    }
    out[t] = den < kSilenceFloor ? 0.0 : num / den;
  }
  return out;
}

std::vector<double> spectral_bandwidth(const Spectrogram& s) {
  const std::vector<double> centroid = spectral_centroid(s);
  const std::size_t frames = s.frames(), bins = s.bins();
  std::vector<double> out(frames, 0.0);
  for (std::size_t t = 0; t < frames; ++t) {
    double num = 0.0, den = 0.0;
    for (std::size_t b = 0; b < bins; ++b) {
      const double mag = s.magnitudes(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(b));
      const double df = s.bin_frequency(b) - centroid[t];
      num += df * df * mag;
      den += mag;
    }
    out[t] = den < kSilenceFloor ? 0.0 : std::sqrt(num / den);
  }
  return out;
}

namespace {

double mean_above_floor(const std::vector<double>& per_frame, const Spectrogram& s) {
  double acc = 0.0;
  std::size_t count = 0;
  for (std::size_t t = 0; t < per_frame.size(); ++t) {
    double den = 0.0;
    for (std::size_t b = 0; b < s.bins(); ++b) {
      den += s.magnitudes(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(b));
    }
    if (den >= kSilenceFloor) {
      acc += per_frame[t];
      ++count;
    }
  }
  return count == 0 ? 0.0 : acc / static_cast<double>(count);
}

}  // namespace

SpectralStats spectral_stats(const Spectrogram& s) {
  SpectralStats st;
  st.centroid_hz = spectral_centroid(s);
  st.bandwidth_hz = spectral_bandwidth(s);
  st.centroid_mean_hz = mean_above_floor(st.centroid_hz, s);
  st.bandwidth_mean_hz = mean_above_floor(st.bandwidth_hz, s);
  return st;
}

double snr_db(const Waveform& test, const Waveform& reference) {
  if (test.samples.size() != reference.samples.size()) {
    throw Error(Errc::length_mismatch, "snr_db: lengths differ");
  }
  if (test.sample_rate != reference.sample_rate) {
    throw Error(Errc::sample_rate_mismatch, "snr_db");
  }
  double ref_energy = 0.0, err_energy = 0.0;
  for (std::size_t i = 0; i < test.samples.size(); ++i) {
    const double e = test.samples[i] - reference.samples[i];
    ref_energy += reference.samples[i] * reference.samples[i];
    err_energy += e * e;
  }
  if (err_energy == 0.0) return kSnrCapDb;
  const double snr = 10.0 * std::log10(ref_energy / err_energy);
  return std::min(snr, kSnrCapDb);
}

double boundary_discontinuity(const Waveform& w, std::size_t boundary, double window_ms,
                              std::size_t frame_length, std::size_t hop_length, int mel_bands) {
  validate(w, "boundary_discontinuity");
  const std::size_t window =
      static_cast<std::size_t>(std::llround(window_ms * 1e-3 * w.sample_rate));
  if (window == 0 || boundary < window || boundary + window > w.samples.size()) {
    throw Error(Errc::boundary_out_of_range, "boundary_discontinuity: window exceeds signal");
  }

  Spectrogram s = stft(w, frame_length, hop_length);
  const double fmax = w.sample_rate / 2.0;
  MelSpectrogram mel = mel_spectrogram(s, mel_bands, 0.0, fmax);
  const Eigen::MatrixXd& lm = mel.log_energies;
  const std::size_t frames = static_cast<std::size_t>(lm.rows());

  // frames whose center falls inside [begin, end)
  auto frames_in = [&](std::size_t begin, std::size_t end) {
    std::vector<std::size_t> idx;
    for (std::size_t t = 0; t < frames; ++t) {
      const std::size_t center = t * hop_length + frame_length / 2;
      if (center >= begin && center < end) idx.push_back(t);
    }
    return idx;
  };
  auto mean_row = [&](const std::vector<std::size_t>& idx) {
    Eigen::RowVectorXd acc = Eigen::RowVectorXd::Zero(lm.cols());
    for (std::size_t t : idx) acc += lm.row(static_cast<Eigen::Index>(t));
    if (!idx.empty()) acc /= static_cast<double>(idx.size());
    return acc;
  };

  std::vector<std::size_t> left = frames_in(boundary - window, boundary);
  std::vector<std::size_t> right = frames_in(boundary, boundary + window);
  if (left.empty() || right.empty()) {
    throw Error(Errc::boundary_out_of_range,
                "boundary_discontinuity: window too short for one analysis frame");
  }

  const double dist = (mean_row(left) - mean_row(right)).norm();

  double flux = 0.0;
  for (std::size_t t = 0; t + 1 < frames; ++t) {
    flux += (lm.row(static_cast<Eigen::Index>(t + 1)) - lm.row(static_cast<Eigen::Index>(t)))
                .norm();
  }
  flux = frames > 1 ? flux / static_cast<double>(frames - 1) : 0.0;

  return dist / std::max(flux, 1e-12);
}

void MetricReport::write_text(const std::string& path) const {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw Error(Errc::io_error, "cannot open for writing: " + path);
  os << std::setprecision(12);
  os << "config_hash = " << config_hash << '\n';
  if (!timestamp.empty()) os << "timestamp = " << timestamp << '\n';
  for (const auto& [stage, m] : stages) {
    os << '\n' << "stage." << stage << ".centroid_mean_hz = " << m.stats.centroid_mean_hz << '\n';
    os << "stage." << stage << ".bandwidth_mean_hz = " << m.stats.bandwidth_mean_hz << '\n';
    if (m.snr_db) os << "stage." << stage << ".snr_db = " << *m.snr_db << '\n';
    if (m.boundary_discontinuity) {
      os << "stage." << stage << ".boundary_discontinuity = " << *m.boundary_discontinuity
         << '\n';
    }
  }
  if (!os) throw Error(Errc::io_error, "write failed: " + path);
}

void MetricReport::write_csv(const std::string& path) const {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw Error(Errc::io_error, "cannot open for writing: " + path);
  os << std::setprecision(12);
  os << "stage,metric,frame_index,value\n";
  for (const auto& [stage, m] : stages) {
    for (std::size_t t = 0; t < m.stats.centroid_hz.size(); ++t) {
      os << stage << ",centroid_hz," << t << ',' << m.stats.centroid_hz[t] << '\n';
    }
    for (std::size_t t = 0; t < m.stats.bandwidth_hz.size(); ++t) {
      os << stage << ",bandwidth_hz," << t << ',' << m.stats.bandwidth_hz[t] << '\n';
    }
    os << stage << ",centroid_mean_hz,-1," << m.stats.centroid_mean_hz << '\n';
    os << stage << ",bandwidth_mean_hz,-1," << m.stats.bandwidth_mean_hz << '\n';
    if (m.snr_db) os << stage << ",snr_db,-1," << *m.snr_db << '\n';
    if (m.boundary_discontinuity) {
      os << stage << ",boundary_discontinuity,-1," << *m.boundary_discontinuity << '\n';
    }
  }
  if (!os) throw Error(Errc::io_error, "write failed: " + path);
}

}  // namespace nsedit
