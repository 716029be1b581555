#ifndef NSEDIT_IIR_HPP
#define NSEDIT_IIR_HPP

#include <complex>
#include <vector>

namespace nsedit {

// Direct-form IIR filter H(z) = sum b_k z^-k / (1 + sum a_k z^-k).
// a[0] must be exactly 1 and every pole must lie strictly inside the unit
// circle; the constructor enforces both.
class IirFilter {
 public:
  IirFilter(std::vector<double> b, std::vector<double> a);

  const std::vector<double>& b() const { return b_; }
  const std::vector<double>& a() const { return a_; }
  std::size_t order() const { return std::max(b_.size(), a_.size()); }
  bool is_identity() const;

  // Default bandpass-style coefficients used by the suppression stage.
  static IirFilter default_suppression();
  static IirFilter identity();

 private:
  std::vector<double> b_;
  std::vector<double> a_;
};

// Frequency response H(e^{j omega}), omega in radians/sample.
std::complex<double> butterworth_response(const IirFilter& f, double omega);

// Single forward pass (direct form II transposed) with initial state zi
// (may be empty for zero state).
std::vector<double> lfilter(const IirFilter& f, const std::vector<double>& x,
                            const std::vector<double>& zi = {});

// Steady-state initial conditions for a unit step input; scaled by the
// first sample inside filtfilt to suppress startup transients.
std::vector<double> lfilter_zi(const IirFilter& f);

// Zero-phase forward-backward filtering with odd-reflection padding of
// length 3 * max(len(b), len(a)). Requires len(x) > pad length.
std::vector<double> filtfilt(const IirFilter& f, const std::vector<double>& x);

}  // namespace nsedit

#endif
