#include "nsedit/fixtures.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>

#include "nsedit/errors.hpp"
#include "nsedit/rng.hpp"

namespace nsedit {

IirFilter fixture_band_filter() {
  return IirFilter({0.003869518, 0.015478073, 0.023217110, 0.015478073, 0.003869518},
                   {1.0, -2.470271925, 2.477970648, -1.154634728, 0.208848298});
}

namespace {

// 2^-18 amplitude grid; sums and differences of grid values below |2| are
// exact in float32 and double
double grid(double v) { return std::round(v * 262144.0) / 262144.0; }

void grid_all(std::vector<double>& v) {
  for (double& s : v) s = grid(s);
}

double energy(const std::vector<double>& v) {
  double acc = 0.0;
  for (double s : v) acc += s * s;
  return acc;
}

}  // namespace

Waveform make_vowel(std::uint64_t seed, double fundamental_hz, double duration_s,
                    int sample_rate, double silence_s) {
  if (fundamental_hz <= 0.0 || duration_s <= 0.0 || sample_rate <= 0) {
    throw Error(Errc::invalid_argument, "make_vowel: bad parameters");
  }
  Rng rng(seed);
  const std::size_t voiced = static_cast<std::size_t>(duration_s * sample_rate);
  const std::size_t margin = static_cast<std::size_t>(silence_s * sample_rate);
  const std::size_t total = voiced + 2 * margin;

  // five harmonics with seeded amplitudes/phases, 1/k amplitude rolloff
  constexpr int kHarmonics = 5;
  double amp[kHarmonics], phase[kHarmonics];
  for (int k = 0; k < kHarmonics; ++k) {
    amp[k] = (0.6 + 0.4 * rng.uniform()) / static_cast<double>(k + 1);
    phase[k] = rng.uniform(0.0, 2.0 * M_PI);
  }
  // slow vibrato keeps frames from being perfectly stationary
  const double vibrato_hz = rng.uniform(3.0, 5.0);
  const double vibrato_depth = 0.004;

  std::vector<double> samples(total, 0.0);
  const double attack = 0.06 * static_cast<double>(voiced);
  for (std::size_t i = 0; i < voiced; ++i) {
    const double t = static_cast<double>(i) / sample_rate;
    double env = 1.0;
    if (static_cast<double>(i) < attack) env = static_cast<double>(i) / attack;
    const double tail = static_cast<double>(voiced - 1 - i);
    if (tail < attack) env = std::min(env, tail / attack);
    const double f0 =
        fundamental_hz * (1.0 + vibrato_depth * std::sin(2.0 * M_PI * vibrato_hz * t));
    double v = 0.0;
    for (int k = 0; k < kHarmonics; ++k) {
      v += amp[k] * std::sin(2.0 * M_PI * f0 * (k + 1) * t + phase[k]);
    }
    samples[margin + i] = 0.28 * env * v;
  }
  grid_all(samples);
  return Waveform(std::move(samples), sample_rate);
}

Waveform make_noise(std::uint64_t seed, NoiseKind kind, std::size_t length, int sample_rate) {
  Rng rng(seed);
  std::vector<double> samples(length);
  if (kind == NoiseKind::white) {
    for (auto& s : samples) s = 0.1 * rng.gaussian();
  } else {
    // Kellet-style pinking filter over white gaussian input
    double b0 = 0, b1 = 0, b2 = 0, b3 = 0, b4 = 0, b5 = 0, b6 = 0;
    for (auto& s : samples) {
      const double white = rng.gaussian();
      b0 = 0.99886 * b0 + white * 0.0555179;
      b1 = 0.99332 * b1 + white * 0.0750759;
      b2 = 0.96900 * b2 + white * 0.1538520;
      b3 = 0.86650 * b3 + white * 0.3104856;
      b4 = 0.55000 * b4 + white * 0.5329522;
      b5 = -0.7616 * b5 - white * 0.0168980;
      const double pink = b0 + b1 + b2 + b3 + b4 + b5 + b6 + white * 0.5362;
      b6 = white * 0.115926;
      s = 0.02 * pink;
    }
  }
  grid_all(samples);
  return Waveform(std::move(samples), sample_rate);
}

FixturePair make_fixture_pair(std::uint64_t seed, double fundamental_hz, NoiseKind kind,
                              double snr_db, double duration_s, int sample_rate) {
  FixturePair p;
  p.fundamental_hz = fundamental_hz;
  p.snr_db = snr_db;
  p.noise_kind = kind;
  p.clean = make_vowel(seed, fundamental_hz, duration_s, sample_rate);
  p.noise = make_noise(seed ^ 0x9e3779b97f4a7c15ull, kind, p.clean.samples.size(), sample_rate);

  const double clean_energy = energy(p.clean.samples);
  const double noise_energy = energy(p.noise.samples);
  if (noise_energy > 0.0 && clean_energy > 0.0) {
    const double target = clean_energy / std::pow(10.0, snr_db / 10.0);
    const double scale = std::sqrt(target / noise_energy);
    for (double& s : p.noise.samples) s = grid(s * scale);
  }

  p.noisy.sample_rate = sample_rate;
  p.noisy.samples.resize(p.clean.samples.size());
  for (std::size_t i = 0; i < p.noisy.samples.size(); ++i) {
    p.noisy.samples[i] = p.clean.samples[i] + p.noise.samples[i];  // exact on the grid
  }
  return p;
}

std::vector<FixtureCorpusEntry> generate_fixture_corpus(const std::string& directory, int count,
                                                        std::uint64_t seed, double duration_s,
                                                        int sample_rate) {
  namespace fs = std::filesystem;
  if (count < 1) throw Error(Errc::invalid_argument, "generate_fixture_corpus: count >= 1");
  fs::create_directories(directory);

  const double snrs[] = {0.0, 5.0, 10.0};
  std::vector<FixtureCorpusEntry> entries;
  entries.reserve(static_cast<std::size_t>(count));

  std::ofstream index(fs::path(directory) / "fixtures.txt", std::ios::trunc);
  if (!index) throw Error(Errc::io_error, "cannot write fixture index");
  index << "# clean noisy replacement f0_hz snr_db noise_kind edit_start edit_len\n";

  Rng pick(seed);
  for (int i = 0; i < count; ++i) {
    const double f0 = 120.0 + 100.0 * pick.uniform();
    const NoiseKind kind = (i % 2 == 0) ? NoiseKind::white : NoiseKind::pink;
    const double snr = snrs[i % 3];
    const std::uint64_t pair_seed = seed + 1000ull * static_cast<std::uint64_t>(i) + 17ull;

    FixturePair p = make_fixture_pair(pair_seed, f0, kind, snr, duration_s, sample_rate);

    // replacement material: a different vowel, sized to half the voiced span
    const double rep_f0 = 120.0 + 100.0 * pick.uniform();
    Waveform rep = make_vowel(pair_seed ^ 0xabcdef12345ull, rep_f0, duration_s * 0.4,
                              sample_rate, 0.0);

    FixtureCorpusEntry e;
    e.fundamental_hz = f0;
    e.snr_db = snr;
    e.noise_kind = kind;
    const std::size_t margin = static_cast<std::size_t>(0.12 * sample_rate);
    e.suggested_edit_start = margin + p.clean.samples.size() / 4;
    e.suggested_edit_len = p.clean.samples.size() / 5;

    char name[64];
    std::snprintf(name, sizeof(name), "fixture_%03d", i);
    const fs::path clean_path = fs::path(directory) / (std::string(name) + "_clean.wav");
    const fs::path noisy_path = fs::path(directory) / (std::string(name) + "_noisy.wav");
    const fs::path rep_path = fs::path(directory) / (std::string(name) + "_replacement.wav");
    write_wav(p.clean, clean_path.string(), WavEncoding::float32);
    write_wav(p.noisy, noisy_path.string(), WavEncoding::float32);
    write_wav(rep, rep_path.string(), WavEncoding::float32);
    e.clean_path = clean_path.string();
    e.noisy_path = noisy_path.string();
    e.replacement_path = rep_path.string();

    index << e.clean_path << ' ' << e.noisy_path << ' ' << e.replacement_path << ' ' << f0
          << ' ' << snr << ' ' << (kind == NoiseKind::white ? "white" : "pink") << ' '
          << e.suggested_edit_start << ' ' << e.suggested_edit_len << '\n';
    entries.push_back(std::move(e));
  }
  return entries;
}

}  // namespace nsedit
