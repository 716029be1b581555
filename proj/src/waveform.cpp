#include "nsedit/waveform.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>

#include "nsedit/errors.hpp"

namespace nsedit {

void validate(const Waveform& w, const char* context) {
  if (w.sample_rate <= 0) {
    throw Error(Errc::invalid_argument,
                std::string(context) + ": sample_rate must be positive");
  }
  for (double s : w.samples) {
    if (!std::isfinite(s)) {
      throw Error(Errc::invalid_argument,
                  std::string(context) + ": waveform contains NaN/Inf");
    }
  }
}

double rms(const Waveform& w) {
  if (w.samples.empty()) return 0.0;
  double acc = 0.0;
  for (double s : w.samples) acc += s * s;
  return std::sqrt(acc / static_cast<double>(w.samples.size()));
}

Waveform quantize_float32(const Waveform& w) {
  Waveform out;
  out.sample_rate = w.sample_rate;
  out.samples.resize(w.samples.size());
  for (std::size_t i = 0; i < w.samples.size(); ++i) {
    out.samples[i] = static_cast<double>(static_cast<float>(w.samples[i]));
  }
  return out;
}

namespace {

constexpr std::uint16_t kFormatPcm = 1;
constexpr std::uint16_t kFormatFloat = 3;
constexpr std::uint16_t kFormatExtensible = 0xfffe;

std::uint32_t read_u32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

std::uint16_t read_u16(const unsigned char* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

void put_u32(std::vector<unsigned char>& v, std::uint32_t x) {
  v.push_back(static_cast<unsigned char>(x & 0xff));
  v.push_back(static_cast<unsigned char>((x >> 8) & 0xff));
  v.push_back(static_cast<unsigned char>((x >> 16) & 0xff));
  v.push_back(static_cast<unsigned char>((x >> 24) & 0xff));
}

void put_u16(std::vector<unsigned char>& v, std::uint16_t x) {
  v.push_back(static_cast<unsigned char>(x & 0xff));
  v.push_back(static_cast<unsigned char>((x >> 8) & 0xff));
}

}  // namespace

Waveform read_wav(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::file_not_found, path);

  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());
  if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
      std::memcmp(bytes.data() + 8, "WAVE", 4) != 0) {
    throw Error(Errc::corrupt_header, path + ": not a RIFF/WAVE file");
  }

  std::uint16_t format = 0, channels = 0, bits = 0;
  std::uint32_t sample_rate = 0;
  bool have_fmt = false;
  const unsigned char* data = nullptr;
  std::uint32_t data_size = 0;

  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const unsigned char* chunk = bytes.data() + pos;
    std::uint32_t chunk_size = read_u32(chunk + 4);
    std::size_t body = pos + 8;
    if (body + chunk_size > bytes.size()) {
      throw Error(Errc::corrupt_header, path + ": truncated chunk");
    }
    if (std::memcmp(chunk, "fmt ", 4) == 0) {
      if (chunk_size < 16) throw Error(Errc::corrupt_header, path + ": short fmt chunk");
      format = read_u16(bytes.data() + body);
      channels = read_u16(bytes.data() + body + 2);
      sample_rate = read_u32(bytes.data() + body + 4);
      bits = read_u16(bytes.data() + body + 14);
      if (format == kFormatExtensible && chunk_size >= 40) {
        // sub-format GUID starts with the base format tag
        format = read_u16(bytes.data() + body + 24);
      }
      have_fmt = true;
    } else if (std::memcmp(chunk, "data", 4) == 0) {
      data = bytes.data() + body;
      data_size = chunk_size;
    }
    pos = body + chunk_size + (chunk_size & 1);  // chunks are word aligned
  }

  if (!have_fmt || data == nullptr) {
    throw Error(Errc::corrupt_header, path + ": missing fmt or data chunk");
  }
  if (channels == 0 || sample_rate == 0) {
    throw Error(Errc::corrupt_header, path + ": invalid fmt fields");
  }

  const bool pcm16 = (format == kFormatPcm && bits == 16);
  const bool f32 = (format == kFormatFloat && bits == 32);
  if (!pcm16 && !f32) {
    throw Error(Errc::unsupported_format,
                path + ": only PCM16 and float32 are supported");
  }

  const std::size_t bytes_per_sample = pcm16 ? 2 : 4;
  const std::size_t frame_bytes = bytes_per_sample * channels;
  const std::size_t frames = data_size / frame_bytes;

  Waveform w;
  w.sample_rate = static_cast<int>(sample_rate);
  w.samples.resize(frames);
  for (std::size_t i = 0; i < frames; ++i) {
    double acc = 0.0;
    for (std::size_t c = 0; c < channels; ++c) {
      const unsigned char* p = data + i * frame_bytes + c * bytes_per_sample;
      if (pcm16) {
        std::int16_t v = static_cast<std::int16_t>(p[0] | (p[1] << 8));
        acc += static_cast<double>(v) / 32768.0;
      } else {
        std::uint32_t u = read_u32(p);
        float f;
        std::memcpy(&f, &u, 4);
        acc += static_cast<double>(f);
      }
    }
    w.samples[i] = acc / channels;
  }
  validate(w, "read_wav");
  return w;
}

void write_wav(const Waveform& w, const std::string& path, WavEncoding encoding) {
  validate(w, "write_wav");
  const bool pcm = (encoding == WavEncoding::pcm16);
  const std::uint32_t bytes_per_sample = pcm ? 2 : 4;
  const std::uint32_t n = static_cast<std::uint32_t>(w.samples.size());
  const std::uint32_t data_size = n * bytes_per_sample;

  std::vector<unsigned char> out;
  out.reserve(44 + data_size);
  out.insert(out.end(), {'R', 'I', 'F', 'F'});
  put_u32(out, 36 + data_size);
  out.insert(out.end(), {'W', 'A', 'V', 'E'});
  out.insert(out.end(), {'f', 'm', 't', ' '});
  put_u32(out, 16);
  put_u16(out, pcm ? kFormatPcm : kFormatFloat);
  put_u16(out, 1);  // mono
  put_u32(out, static_cast<std::uint32_t>(w.sample_rate));
  put_u32(out, static_cast<std::uint32_t>(w.sample_rate) * bytes_per_sample);
  put_u16(out, static_cast<std::uint16_t>(bytes_per_sample));
  put_u16(out, pcm ? 16 : 32);
  out.insert(out.end(), {'d', 'a', 't', 'a'});
  put_u32(out, data_size);

  for (double s : w.samples) {
    if (pcm) {
      double clipped = std::clamp(s, -1.0, 1.0 - 1.0 / 32768.0);
      double scaled = clipped * 32768.0;
      long q = std::lround(scaled);
      q = std::clamp(q, -32768l, 32767l);
      put_u16(out, static_cast<std::uint16_t>(static_cast<std::int16_t>(q)));
    } else {
      float f = static_cast<float>(s);
      std::uint32_t u;
      std::memcpy(&u, &f, 4);
      put_u32(out, u);
    }
  }

  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw Error(Errc::io_error, "cannot open for writing: " + path);
  os.write(reinterpret_cast<const char*>(out.data()),
           static_cast<std::streamsize>(out.size()));
  if (!os) throw Error(Errc::io_error, "write failed: " + path);
}

}  // namespace nsedit
