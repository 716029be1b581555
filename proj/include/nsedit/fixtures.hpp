#ifndef NSEDIT_FIXTURES_HPP
#define NSEDIT_FIXTURES_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "nsedit/iir.hpp"
#include "nsedit/waveform.hpp"

namespace nsedit {

enum class NoiseKind { white, pink };

// 4th-order Butterworth low-pass at 1.5 kHz / 16 kHz covering the fixture
// harmonics; the suppression filter used by the fixture-suite configs.
IirFilter fixture_band_filter();

// Harmonic "vowel" with an attack/release amplitude envelope and silence
// margins, deterministic in the seed. Samples land on a 2^-18 amplitude grid
// so clean + noise sums are exact in float arithmetic.
Waveform make_vowel(std::uint64_t seed, double fundamental_hz, double duration_s,
                    int sample_rate = 16000, double silence_s = 0.12);

// Unit-RMS-ish noise on the same amplitude grid.
Waveform make_noise(std::uint64_t seed, NoiseKind kind, std::size_t length,
                    int sample_rate = 16000);

struct FixturePair {
  Waveform clean;
  Waveform noise;   // scaled so clean + noise sits at snr_db over the file
  Waveform noisy;   // clean + noise, exact on the amplitude grid
  double snr_db = 0.0;
  double fundamental_hz = 0.0;
  NoiseKind noise_kind = NoiseKind::white;
};

FixturePair make_fixture_pair(std::uint64_t seed, double fundamental_hz, NoiseKind kind,
                              double snr_db, double duration_s, int sample_rate = 16000);

struct FixtureCorpusEntry {
  std::string clean_path;
  std::string noisy_path;
  std::string replacement_path;
  double fundamental_hz;
  double snr_db;
  NoiseKind noise_kind;
  std::size_t suggested_edit_start;
  std::size_t suggested_edit_len;
};

// Writes clean/noisy/replacement WAVs plus an index file (fixtures.txt)
// into the directory. count pairs are drawn over fundamentals 120-220 Hz,
// white/pink noise, SNR in {0, 5, 10} dB.
std::vector<FixtureCorpusEntry> generate_fixture_corpus(const std::string& directory,
                                                        int count, std::uint64_t seed,
                                                        double duration_s = 1.0,
                                                        int sample_rate = 16000);

}  // namespace nsedit

#endif
