#include <doctest.h>

#include <cmath>
#include <complex>

#include "nsedit/errors.hpp"
#include "nsedit/iir.hpp"

using namespace nsedit;

namespace {

// amplitude of a sinusoid at a known frequency via quadrature projection
double projected_amplitude(const std::vector<double>& x, double omega, std::size_t begin,
                           std::size_t end) {
  double c = 0.0, s = 0.0;
  for (std::size_t i = begin; i < end; ++i) {
    c += x[i] * std::cos(omega * static_cast<double>(i));
    s += x[i] * std::sin(omega * static_cast<double>(i));
  }
  const double n = static_cast<double>(end - begin) / 2.0;
  return std::sqrt(c * c + s * s) / n;
}

std::vector<double> make_sine(double omega, std::size_t length) {
  std::vector<double> x(length);
  for (std::size_t i = 0; i < length; ++i) x[i] = std::sin(omega * static_cast<double>(i));
  return x;
}

}  // namespace

TEST_CASE("printed coefficients: DC blocked, Nyquist passed") {
  const IirFilter f = IirFilter::default_suppression();
  CHECK(std::abs(butterworth_response(f, 0.0)) < 1e-4);
  CHECK(std::abs(std::abs(butterworth_response(f, M_PI)) - 1.0) < 1e-3);
}

TEST_CASE("identity filter has unit gain everywhere") {
  const IirFilter id = IirFilter::identity();
  for (double omega : {0.0, 0.3, 1.0, 2.5, M_PI}) {
    CHECK(std::abs(butterworth_response(id, omega) - std::complex<double>(1.0, 0.0)) == 0.0);
  }
}

TEST_CASE("response matches a brute-force polynomial evaluation") {
  const IirFilter f = IirFilter::default_suppression();
  for (double omega : {0.1, 0.7, 1.3, 2.9}) {
    const std::complex<double> z = std::exp(std::complex<double>(0.0, omega));
    std::complex<double> num(0, 0), den(0, 0);
    for (std::size_t k = 0; k < f.b().size(); ++k) num += f.b()[k] * std::pow(z, -double(k));
    for (std::size_t k = 0; k < f.a().size(); ++k) den += f.a()[k] * std::pow(z, -double(k));
    CHECK(std::abs(butterworth_response(f, omega) - num / den) < 1e-12);
  }
}

TEST_CASE("constructor rejects invalid filters") {
  CHECK_THROWS_AS(IirFilter({1.0}, {2.0}), Error);             // a[0] != 1
  CHECK_THROWS_AS(IirFilter({}, {1.0}), Error);                // empty b
  CHECK_THROWS_AS(IirFilter({1.0}, {1.0, -2.0}), Error);       // pole at z = 2
  CHECK_THROWS_AS(IirFilter({1.0}, {1.0, 1.0}), Error);        // pole on the circle
  CHECK_NOTHROW(IirFilter({1.0, 0.5}, {1.0, -0.5}));           // stable
}

TEST_CASE("filtfilt on zeros and identity") {
  const IirFilter f = IirFilter::default_suppression();
  std::vector<double> zeros(256, 0.0);
  auto out = filtfilt(f, zeros);
  REQUIRE(out.size() == zeros.size());
  for (double v : out) CHECK(v == 0.0);

  std::vector<double> x = make_sine(0.3, 300);
  auto same = filtfilt(IirFilter::identity(), x);
  REQUIRE(same.size() == x.size());
  for (std::size_t i = 0; i < x.size(); ++i) CHECK(same[i] == x[i]);
}

TEST_CASE("filtfilt rejects too-short inputs") {
  const IirFilter f = IirFilter::default_suppression();  // order 5, pad 15
  CHECK_THROWS_AS(filtfilt(f, std::vector<double>(15, 1.0)), Error);
  CHECK_NOTHROW(filtfilt(f, std::vector<double>(16, 1.0)));
}

TEST_CASE("filtfilt gain is |H|^2 with zero lag") {
  const IirFilter f = IirFilter::default_suppression();
  const std::size_t n = 8000;
  for (double omega : {0.9, 1.4, 2.0, 2.8}) {
    const double h = std::abs(butterworth_response(f, omega));
    if (h < 0.05) continue;
    std::vector<double> x = make_sine(omega, n);
    std::vector<double> y = filtfilt(f, x);
    const double in_amp = projected_amplitude(x, omega, 1000, n - 1000);
    const double out_amp = projected_amplitude(y, omega, 1000, n - 1000);
    CHECK(out_amp / in_amp == doctest::Approx(h * h).epsilon(0.01));

    // zero group delay: cross-correlation peaks at lag 0
    double best = -1.0;
    int best_lag = -99;
    for (int lag = -8; lag <= 8; ++lag) {
      double acc = 0.0;
      for (std::size_t i = 1000; i < n - 1000; ++i) {
        acc += y[i] * x[static_cast<std::size_t>(static_cast<int>(i) + lag)];
      }
      if (acc > best) {
        best = acc;
        best_lag = lag;
      }
    }
    CHECK(best_lag == 0);
  }
}

TEST_CASE("single forward pass matches a direct difference equation") {
  const IirFilter f({0.5, 0.25}, {1.0, -0.3});
  std::vector<double> x = {1.0, 0.0, 0.0, 0.0, 2.0, -1.0};
  auto y = lfilter(f, x);
  std::vector<double> expect(x.size(), 0.0);
  for (std::size_t i = 0; i < x.size(); ++i) {
    expect[i] = 0.5 * x[i] + (i >= 1 ? 0.25 * x[i - 1] : 0.0) + (i >= 1 ? 0.3 * expect[i - 1] : 0.0);
  }
  for (std::size_t i = 0; i < x.size(); ++i) CHECK(y[i] == doctest::Approx(expect[i]).epsilon(1e-12));
}

TEST_CASE("steady-state initial conditions absorb a constant input") {
  const IirFilter f = IirFilter::default_suppression();
  auto zi = lfilter_zi(f);
  REQUIRE(zi.size() == 4);
  // with zi scaled by the input level, a constant input yields H(1) * level immediately
  const double level = 0.7;
  std::vector<double> x(32, level);
  std::vector<double> scaled(zi.size());
  for (std::size_t i = 0; i < zi.size(); ++i) scaled[i] = zi[i] * level;
  auto y = lfilter(f, x, scaled);
  const double dc = butterworth_response(f, 0.0).real() * level;
  for (double v : y) CHECK(std::abs(v - dc) < 1e-12);
}
