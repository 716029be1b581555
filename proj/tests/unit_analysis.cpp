#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>

#include "nsedit/analysis.hpp"
#include "nsedit/errors.hpp"
#include "nsedit/rng.hpp"

using namespace nsedit;

namespace {

Waveform sine(double freq, double amplitude, std::size_t length, int rate = 16000) {
  std::vector<double> s(length);
  for (std::size_t i = 0; i < length; ++i) {
    s[i] = amplitude * std::sin(2.0 * M_PI * freq * static_cast<double>(i) / rate);
  }
  return Waveform(std::move(s), rate);
}

Spectrogram empty_spec(std::size_t frames, std::size_t frame_length = 1024, int rate = 16000) {
  Spectrogram s;
  s.frame_length = frame_length;
  s.hop_length = frame_length / 4;
  s.sample_rate = rate;
  s.magnitudes.setZero(static_cast<Eigen::Index>(frames),
                       static_cast<Eigen::Index>(frame_length / 2 + 1));
  s.phase = s.magnitudes;
  return s;
}

}  // namespace

TEST_CASE("centroid of a 1 kHz sine sits within one bin") {
  Spectrogram s = stft(sine(1000.0, 0.7, 16384), 1024, 256);
  auto centroid = spectral_centroid(s);
  const double bin_hz = 16000.0 / 1024.0;
  for (std::size_t t = 4; t + 4 < centroid.size(); ++t) {
    CHECK(std::abs(centroid[t] - 1000.0) <= bin_hz);
  }
}

TEST_CASE("centroid of a single bin is that bin's frequency; silence reports 0") {
  Spectrogram s = empty_spec(2);
  s.magnitudes(0, 100) = 2.5;
  auto centroid = spectral_centroid(s);
  CHECK(centroid[0] == doctest::Approx(s.bin_frequency(100)).epsilon(1e-12));
  CHECK(centroid[1] == 0.0);

  auto bandwidth = spectral_bandwidth(s);
  CHECK(bandwidth[0] == 0.0);  // single bin
  CHECK(bandwidth[1] == 0.0);  // silent sentinel
}

TEST_CASE("two equal bins give bandwidth |f2 - f1| / 2 exactly") {
  Spectrogram s = empty_spec(1);
  s.magnitudes(0, 64) = 1.0;
  s.magnitudes(0, 192) = 1.0;
  const double f1 = s.bin_frequency(64), f2 = s.bin_frequency(192);
  auto centroid = spectral_centroid(s);
  CHECK(centroid[0] == doctest::Approx((f1 + f2) / 2.0).epsilon(1e-12));
  auto bandwidth = spectral_bandwidth(s);
  CHECK(bandwidth[0] == doctest::Approx((f2 - f1) / 2.0).epsilon(1e-12));
}

TEST_CASE("flat spectrum bandwidth matches the uniform distribution") {
  Spectrogram s = empty_spec(1);
  s.magnitudes.setOnes();
  auto bandwidth = spectral_bandwidth(s);
  const double expected = (16000.0 / 2.0) / (2.0 * std::sqrt(3.0));
  CHECK(std::abs(bandwidth[0] - expected) <= 16000.0 / 1024.0);
}

TEST_CASE("centroid and bandwidth bounds and amplitude invariance") {
  Rng rng(31);
  std::vector<double> x(8192);
  for (auto& v : x) v = rng.gaussian();
  Waveform w(x, 16000);
  Spectrogram s1 = stft(w, 1024, 256);
  Waveform w2 = w;
  for (auto& v : w2.samples) v *= 7.25;
  Spectrogram s2 = stft(w2, 1024, 256);

  auto c1 = spectral_centroid(s1), c2 = spectral_centroid(s2);
  auto b1 = spectral_bandwidth(s1), b2 = spectral_bandwidth(s2);
  for (std::size_t t = 0; t < c1.size(); ++t) {
    CHECK(c1[t] >= 0.0);
    CHECK(c1[t] <= 8000.0);
    CHECK(b1[t] >= 0.0);
    CHECK(b1[t] <= 8000.0);
    CHECK(c1[t] == doctest::Approx(c2[t]).epsilon(1e-9));
    CHECK(b1[t] == doctest::Approx(b2[t]).epsilon(1e-9));
  }
}

TEST_CASE("snr_db basics") {
  Waveform ref = sine(440.0, 0.5, 8000);
  CHECK(snr_db(ref, ref) == 120.0);

  Waveform zero(std::vector<double>(ref.samples.size(), 0.0), 16000);
  CHECK(snr_db(zero, ref) == doctest::Approx(0.0).epsilon(1e-12));

  // equal-power noise, RMS matched exactly -> 0 dB
  Rng rng(32);
  std::vector<double> noise(ref.samples.size());
  double ref_e = 0.0, n_e = 0.0;
  for (std::size_t i = 0; i < noise.size(); ++i) {
    noise[i] = rng.gaussian();
    n_e += noise[i] * noise[i];
    ref_e += ref.samples[i] * ref.samples[i];
  }
  const double scale = std::sqrt(ref_e / n_e);
  Waveform test = ref;
  for (std::size_t i = 0; i < noise.size(); ++i) test.samples[i] += scale * noise[i];
  CHECK(snr_db(test, ref) == doctest::Approx(0.0).epsilon(0.01));

  Waveform shorter(std::vector<double>(100, 0.0), 16000);
  CHECK_THROWS_AS(snr_db(shorter, ref), Error);
}

TEST_CASE("snr_db decreases monotonically with added noise power") {
  Waveform ref = sine(300.0, 0.4, 8000);
  Rng rng(33);
  std::vector<double> noise(ref.samples.size());
  for (auto& v : noise) v = rng.gaussian();
  double last = 1e9;
  for (double level : {0.001, 0.01, 0.1, 0.5}) {
    Waveform test = ref;
    for (std::size_t i = 0; i < noise.size(); ++i) test.samples[i] += level * noise[i];
    const double snr = snr_db(test, ref);
    CHECK(snr < last);
    last = snr;
  }
}

TEST_CASE("boundary_discontinuity: stationary tone scores low, hard splice scores high") {
  // 1 kHz at 16 kHz: 16-sample period divides the 256-sample hop
  Rng rng(34);
  std::vector<double> s(32768);
  for (std::size_t i = 0; i < s.size(); ++i) {
    s[i] = 0.5 * std::sin(2.0 * M_PI * 1000.0 * static_cast<double>(i) / 16000.0) +
           0.01 * rng.gaussian();
  }
  Waveform tone(s, 16000);
  const double smooth = boundary_discontinuity(tone, 16384, 50.0);
  CHECK(smooth <= 1.0);

  // tone followed by silence: a hard seam
  std::vector<double> spliced(32768, 0.0);
  for (std::size_t i = 0; i < 16384; ++i) {
    spliced[i] = 0.5 * std::sin(2.0 * M_PI * 1000.0 * static_cast<double>(i) / 16000.0);
  }
  Waveform hard(spliced, 16000);
  CHECK(boundary_discontinuity(hard, 16384, 50.0) > 3.0);
}

TEST_CASE("boundary_discontinuity is translation invariant on a periodic signal") {
  // tile one exact 16-sample period so hop-shifted frames are bit-identical
  double period[16];
  for (int i = 0; i < 16; ++i) {
    period[i] = 0.5 * std::sin(2.0 * M_PI * static_cast<double>(i) / 16.0);
  }
  std::vector<double> s(32768);
  for (std::size_t i = 0; i < s.size(); ++i) s[i] = period[i % 16];
  Waveform tone(s, 16000);
  const double a = boundary_discontinuity(tone, 12288, 50.0);  // multiples of the hop
  const double b = boundary_discontinuity(tone, 20480, 50.0);
  CHECK(std::abs(a - b) < 1e-6);
}

TEST_CASE("boundary_discontinuity rejects out-of-range boundaries") {
  Waveform w(std::vector<double>(16000, 0.1), 16000);
  CHECK_THROWS_AS(boundary_discontinuity(w, 100, 50.0), Error);
  CHECK_THROWS_AS(boundary_discontinuity(w, 15950, 50.0), Error);
}

TEST_CASE("metric report writers") {
  MetricReport report;
  report.config_hash = "deadbeef";
  StageMetrics m;
  m.stats.centroid_hz = {100.0, 200.0};
  m.stats.bandwidth_hz = {50.0, 60.0};
  m.stats.centroid_mean_hz = 150.0;
  m.stats.bandwidth_mean_hz = 55.0;
  m.snr_db = 12.5;
  report.stages["Y"] = m;

  const std::string text = "/tmp/nsedit_report_test.txt";
  const std::string csv = "/tmp/nsedit_report_test.csv";
  report.write_text(text);
  report.write_csv(csv);

  std::ifstream t(text);
  std::string body((std::istreambuf_iterator<char>(t)), std::istreambuf_iterator<char>());
  CHECK(body.find("stage.Y.snr_db = 12.5") != std::string::npos);
  CHECK(body.find("config_hash = deadbeef") != std::string::npos);

  std::ifstream c(csv);
  std::string csv_body((std::istreambuf_iterator<char>(c)), std::istreambuf_iterator<char>());
  CHECK(csv_body.find("stage,metric,frame_index,value") != std::string::npos);
  CHECK(csv_body.find("Y,centroid_hz,0,100") != std::string::npos);
  CHECK(csv_body.find("Y,snr_db,-1,12.5") != std::string::npos);
  std::remove(text.c_str());
  std::remove(csv.c_str());
}
