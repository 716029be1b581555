#include "nsedit/spectral.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "nsedit/errors.hpp"
#include "nsedit/fft.hpp"

namespace nsedit {

std::vector<double> hann_window(std::size_t n) {
  std::vector<double> w(n);
  for (std::size_t i = 0; i < n; ++i) {
    w[i] = 0.5 - 0.5 * std::cos(2.0 * M_PI * static_cast<double>(i) / static_cast<double>(n));
  }
  return w;
}

Spectrogram stft(const Waveform& w, std::size_t frame_length, std::size_t hop_length) {
  if (!is_power_of_two(frame_length)) {
    throw Error(Errc::invalid_argument, "stft: frame_length must be a power of two");
  }
  if (hop_length == 0 || hop_length > frame_length) {
    throw Error(Errc::invalid_hop, "stft: need 0 < hop <= frame_length");
  }
  const std::size_t len = w.samples.size();
  if (len < frame_length) {
    throw Error(Errc::signal_too_short, "stft: signal shorter than one frame");
  }

  // whole frames, plus one zero-padded frame if a partial tail remains
  std::size_t frames = 1 + (len - frame_length) / hop_length;
  if ((len - frame_length) % hop_length != 0) frames += 1;
  const std::size_t bins = frame_length / 2 + 1;

  Spectrogram s;
  s.frame_length = frame_length;
  s.hop_length = hop_length;
  s.sample_rate = w.sample_rate;
  s.magnitudes.resize(static_cast<Eigen::Index>(frames), static_cast<Eigen::Index>(bins));
  s.phase.resize(static_cast<Eigen::Index>(frames), static_cast<Eigen::Index>(bins));

  const std::vector<double> window = hann_window(frame_length);
  std::vector<double> frame(frame_length);
  for (std::size_t t = 0; t < frames; ++t) {
    const std::size_t start = t * hop_length;
    for (std::size_t i = 0; i < frame_length; ++i) {
      const std::size_t idx = start + i;
      frame[i] = idx < len ? w.samples[idx] * window[i] : 0.0;
    }
    auto spec = rfft(frame);
    for (std::size_t b = 0; b < bins; ++b) {
      s.magnitudes(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(b)) =
          std::abs(spec[b]);
      s.phase(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(b)) =
          std::arg(spec[b]);
    }
  }
  return s;
}

Waveform istft(const Spectrogram& s) {
  const std::size_t frame_length = s.frame_length;
  const std::size_t hop = s.hop_length;
  if (hop == 0 || hop > frame_length) {
    throw Error(Errc::invalid_hop, "istft: need 0 < hop <= frame_length");
  }
  if (s.bins() != frame_length / 2 + 1) {
    throw Error(Errc::dimension_mismatch, "istft: bins != frame_length/2 + 1");
  }
  const std::size_t frames = s.frames();
  const std::size_t out_len = frames == 0 ? 0 : (frames - 1) * hop + frame_length;

  Waveform out;
  out.sample_rate = s.sample_rate;
  out.samples.assign(out_len, 0.0);
  std::vector<double> norm(out_len, 0.0);

  const std::vector<double> window = hann_window(frame_length);
  std::vector<std::complex<double>> half(frame_length / 2 + 1);
  for (std::size_t t = 0; t < frames; ++t) {
    for (std::size_t b = 0; b < half.size(); ++b) {
      const double mag = s.magnitudes(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(b));
      const double ph = s.phase(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(b));
      half[b] = std::polar(mag, ph);
    }
    std::vector<double> frame = irfft(half, frame_length);
    const std::size_t start = t * hop;
    for (std::size_t i = 0; i < frame_length; ++i) {
      out.samples[start + i] += frame[i] * window[i];
      norm[start + i] += window[i] * window[i];
    }
  }
  for (std::size_t i = 0; i < out_len; ++i) {
    if (norm[i] > 1e-12) out.samples[i] /= norm[i];
  }
  return out;
}

double MelFilterbank::hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }

double MelFilterbank::mel_to_hz(double mel) {
  return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0);
}

MelFilterbank::MelFilterbank(int mel_bands, double fmin, double fmax, int sample_rate,
                             std::size_t frame_length) {
  if (mel_bands < 1 || fmin < 0.0 || fmin >= fmax || fmax > sample_rate / 2.0) {
    throw Error(Errc::invalid_band_range, "mel filterbank: need 1 <= bands, 0 <= fmin < fmax <= fs/2");
  }
  const std::size_t bins = frame_length / 2 + 1;
  const double mel_lo = hz_to_mel(fmin);
  const double mel_hi = hz_to_mel(fmax);

  edges_hz_.resize(static_cast<std::size_t>(mel_bands) + 2);
  for (int j = 0; j < mel_bands + 2; ++j) {
    const double mel = mel_lo + (mel_hi - mel_lo) * j / (mel_bands + 1);
    edges_hz_[static_cast<std::size_t>(j)] = mel_to_hz(mel);
  }

  weights_.setZero(mel_bands, static_cast<Eigen::Index>(bins));
  for (int j = 0; j < mel_bands; ++j) {
    const double f_lo = edges_hz_[static_cast<std::size_t>(j)];
    const double f_c = edges_hz_[static_cast<std::size_t>(j) + 1];
    const double f_hi = edges_hz_[static_cast<std::size_t>(j) + 2];
    for (std::size_t b = 0; b < bins; ++b) {
      const double f = static_cast<double>(b) * sample_rate / static_cast<double>(frame_length);
      double wgt = 0.0;
      if (f > f_lo && f < f_c) {
        wgt = (f - f_lo) / (f_c - f_lo);
      } else if (f == f_c) {
        wgt = 1.0;
      } else if (f > f_c && f < f_hi) {
        wgt = (f_hi - f) / (f_hi - f_c);
      }
      weights_(j, static_cast<Eigen::Index>(b)) = wgt;
    }
  }
}

MelSpectrogram mel_spectrogram(const Spectrogram& s, int mel_bands, double fmin, double fmax) {
  MelFilterbank bank(mel_bands, fmin, fmax, s.sample_rate, s.frame_length);
  MelSpectrogram m;
  m.mel_bands = mel_bands;
  m.fmin = fmin;
  m.fmax = fmax;
  m.sample_rate = s.sample_rate;
  m.frame_length = s.frame_length;
  m.hop_length = s.hop_length;

  const Eigen::MatrixXd power = s.magnitudes.array().square();
  Eigen::MatrixXd energies = power * bank.weights().transpose();  // frames x bands
  m.log_energies = energies.array().max(kLogFloor).log();
  return m;
}

void write_matrix(const std::string& path, const Eigen::MatrixXd& m, int sample_rate,
                  std::size_t hop) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw Error(Errc::io_error, "cannot open for writing: " + path);
  os << m.rows() << ' ' << m.cols() << ' ' << sample_rate << ' ' << hop << '\n';
  os << std::setprecision(17);
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      if (c) os << ' ';
      os << m(r, c);
    }
    os << '\n';
  }
  if (!os) throw Error(Errc::io_error, "write failed: " + path);
}

Eigen::MatrixXd read_matrix(const std::string& path, int* sample_rate, std::size_t* hop) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::file_not_found, path);
  std::size_t rows = 0, cols = 0, h = 0;
  int sr = 0;
  if (!(in >> rows >> cols >> sr >> h)) {
    throw Error(Errc::corrupt_header, path + ": bad matrix header");
  }
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      double v;
      if (!(in >> v)) throw Error(Errc::io_error, path + ": truncated matrix body");
      m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = v;
    }
  }
  if (sample_rate) *sample_rate = sr;
  if (hop) *hop = h;
  return m;
}

}  // namespace nsedit
