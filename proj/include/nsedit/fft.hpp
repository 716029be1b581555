#ifndef NSEDIT_FFT_HPP
#define NSEDIT_FFT_HPP

#include <complex>
#include <vector>

namespace nsedit {

// In-place iterative radix-2 FFT. Analysis frame lengths are constrained to
// powers of two, so this covers every transform the toolkit needs without an
// external dependency.
void fft_inplace(std::vector<std::complex<double>>& x, bool inverse);

// Forward FFT of a real frame; returns the onesided half spectrum
// (n/2 + 1 bins).
std::vector<std::complex<double>> rfft(const std::vector<double>& frame);

// Inverse of rfft for a real signal of length n (n = 2 * (bins - 1)).
std::vector<double> irfft(const std::vector<std::complex<double>>& half, std::size_t n);

bool is_power_of_two(std::size_t n);

}  // namespace nsedit

#endif
