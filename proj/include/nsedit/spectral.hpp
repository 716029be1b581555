#ifndef NSEDIT_SPECTRAL_HPP
#define NSEDIT_SPECTRAL_HPP

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "nsedit/waveform.hpp"

namespace nsedit {

// STFT of a mono signal. Rows are frames, columns are the n/2+1 onesided
// frequency bins.
struct Spectrogram {
  Eigen::MatrixXd magnitudes;  // frames x bins, >= 0
  Eigen::MatrixXd phase;       // frames x bins, radians
  std::size_t frame_length = 1024;
  std::size_t hop_length = 256;
  int sample_rate = 16000;

  std::size_t frames() const { return static_cast<std::size_t>(magnitudes.rows()); }
  std::size_t bins() const { return static_cast<std::size_t>(magnitudes.cols()); }
  double bin_frequency(std::size_t bin) const {
    return static_cast<double>(bin) * sample_rate / static_cast<double>(frame_length);
  }
};

struct MelSpectrogram {
  Eigen::MatrixXd log_energies;  // frames x mel_bands, natural log of power
  int mel_bands = 80;
  double fmin = 0.0;
  double fmax = 8000.0;
  int sample_rate = 16000;
  std::size_t frame_length = 1024;
  std::size_t hop_length = 256;
};

// Triangular mel filterbank over onesided FFT bins (HTK mel scale,
// unnormalized triangles).
class MelFilterbank {
 public:
  MelFilterbank(int mel_bands, double fmin, double fmax, int sample_rate,
                std::size_t frame_length);

  // weights: mel_bands x bins
  const Eigen::MatrixXd& weights() const { return weights_; }
  int bands() const { return static_cast<int>(weights_.rows()); }
  // band center/edge frequencies in Hz (bands + 2 values)
  const std::vector<double>& edges_hz() const { return edges_hz_; }

  static double hz_to_mel(double hz);
  static double mel_to_hz(double mel);

 private:
  Eigen::MatrixXd weights_;
  std::vector<double> edges_hz_;
};

// Hann analysis window (periodic form).
std::vector<double> hann_window(std::size_t n);

// frame_length must be a power of two; 0 < hop <= frame_length. The tail is
// zero padded to a whole frame. Throws SignalTooShort if the signal is
// shorter than one frame.
Spectrogram stft(const Waveform& w, std::size_t frame_length, std::size_t hop_length);

// Least-squares overlap-add inverse. Output length is
// (frames - 1) * hop + frame_length; callers that padded crop to taste.
Waveform istft(const Spectrogram& s);

MelSpectrogram mel_spectrogram(const Spectrogram& s, int mel_bands, double fmin,
                               double fmax);

constexpr double kLogFloor = 1e-10;  // power floor before the log

// Portable matrix file: header "rows cols sample_rate hop" then row-major
// whitespace separated values.
void write_matrix(const std::string& path, const Eigen::MatrixXd& m, int sample_rate,
                  std::size_t hop);
Eigen::MatrixXd read_matrix(const std::string& path, int* sample_rate = nullptr,
                            std::size_t* hop = nullptr);

}  // namespace nsedit

#endif
