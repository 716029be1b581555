#include "nsedit/fft.hpp"

#include <cmath>

#include "nsedit/errors.hpp"

namespace nsedit {

bool is_power_of_two(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

void fft_inplace(std::vector<std::complex<double>>& x, bool inverse) {
  const std::size_t n = x.size();
  if (n <= 1) return;
  if (!is_power_of_two(n)) {
    throw Error(Errc::invalid_argument, "fft length must be a power of two");
  }

  // bit reversal
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(x[i], x[j]);
  }

  const double sign = inverse ? 1.0 : -1.0;
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const double ang = sign * 2.0 * M_PI / static_cast<double>(len);
    const std::complex<double> wlen(std::cos(ang), std::sin(ang));
    for (std::size_t i = 0; i < n; i += len) {
      std::complex<double> w(1.0, 0.0);
      for (std::size_t k = 0; k < len / 2; ++k) {
        std::complex<double> u = x[i + k];
        std::complex<double> v = x[i + k + len / 2] * w;
        x[i + k] = u + v;
        x[i + k + len / 2] = u - v;
        w *= wlen;
      }
    }
  }

  if (inverse) {
    const double inv = 1.0 / static_cast<double>(n);
    for (auto& v : x) v *= inv;
  }
}

std::vector<std::complex<double>> rfft(const std::vector<double>& frame) {
  std::vector<std::complex<double>> buf(frame.size());
  for (std::size_t i = 0; i < frame.size(); ++i) buf[i] = frame[i];
  fft_inplace(buf, false);
  buf.resize(frame.size() / 2 + 1);
  return buf;
}

std::vector<double> irfft(const std::vector<std::complex<double>>& half, std::size_t n) {
  if (half.size() != n / 2 + 1) {
    throw Error(Errc::dimension_mismatch, "irfft: bins != n/2 + 1");
  }
  std::vector<std::complex<double>> buf(n);
  for (std::size_t k = 0; k < half.size(); ++k) buf[k] = half[k];
  for (std::size_t k = half.size(); k < n; ++k) buf[k] = std::conj(half[n - k]);
  fft_inplace(buf, true);
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = buf[i].real();
  return out;
}

}  // namespace nsedit
