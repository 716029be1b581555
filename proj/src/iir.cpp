#include "nsedit/iir.hpp"

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>

#include "nsedit/errors.hpp"

namespace nsedit {

IirFilter::IirFilter(std::vector<double> b, std::vector<double> a)
    : b_(std::move(b)), a_(std::move(a)) {
  if (b_.empty() || a_.empty()) {
    throw Error(Errc::invalid_argument, "IirFilter: empty coefficient vector");
  }
  if (a_[0] != 1.0) {
    throw Error(Errc::invalid_argument, "IirFilter: a[0] must be exactly 1");
  }
  for (double c : b_) {
    if (!std::isfinite(c)) throw Error(Errc::invalid_argument, "IirFilter: non-finite b");
  }
  for (double c : a_) {
    if (!std::isfinite(c)) throw Error(Errc::invalid_argument, "IirFilter: non-finite a");
  }

  // strip trailing zeros of a before the stability check so FIR filters
  // expressed with padded denominators do not produce spurious poles
  std::size_t deg = a_.size();
  while (deg > 1 && a_[deg - 1] == 0.0) --deg;
  if (deg > 1) {
    Eigen::MatrixXd companion = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(deg - 1),
                                                      static_cast<Eigen::Index>(deg - 1));
    for (std::size_t k = 1; k < deg; ++k) {
      companion(0, static_cast<Eigen::Index>(k - 1)) = -a_[k];
    }
    for (std::size_t k = 1; k + 1 < deg; ++k) {
      companion(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(k - 1)) = 1.0;
    }
    Eigen::VectorXcd poles = companion.eigenvalues();
    for (Eigen::Index i = 0; i < poles.size(); ++i) {
      if (std::abs(poles[i]) >= 1.0) {
        throw Error(Errc::invalid_argument, "IirFilter: pole on or outside the unit circle");
      }
    }
  }
}

bool IirFilter::is_identity() const {
  auto all_tail_zero = [](const std::vector<double>& v) {
    for (std::size_t i = 1; i < v.size(); ++i) {
      if (v[i] != 0.0) return false;
    }
    return true;
  };
  return b_[0] == 1.0 && all_tail_zero(b_) && all_tail_zero(a_);
}

IirFilter IirFilter::identity() { return IirFilter({1.0}, {1.0}); }

IirFilter IirFilter::default_suppression() {
  return IirFilter({0.093981, -0.375923, 0.563885, -0.375923, 0.093981},
                   {1.0, 0.0, 0.486029, 0.0, 0.017665});
}

std::complex<double> butterworth_response(const IirFilter& f, double omega) {
  const std::complex<double> j(0.0, 1.0);
  std::complex<double> num(0.0, 0.0), den(0.0, 0.0);
  for (std::size_t k = 0; k < f.b().size(); ++k) {
    num += f.b()[k] * std::exp(-j * (omega * static_cast<double>(k)));
  }
  for (std::size_t k = 0; k < f.a().size(); ++k) {
    den += f.a()[k] * std::exp(-j * (omega * static_cast<double>(k)));
  }
  return num / den;
}

std::vector<double> lfilter(const IirFilter& f, const std::vector<double>& x,
                            const std::vector<double>& zi) {
  const std::size_t n = f.order();
  std::vector<double> b = f.b(), a = f.a();
  b.resize(n, 0.0);
  a.resize(n, 0.0);

  std::vector<double> z(n > 0 ? n - 1 : 0, 0.0);
  if (!zi.empty()) {
    if (zi.size() != z.size()) {
      throw Error(Errc::dimension_mismatch, "lfilter: zi size mismatch");
    }
    z = zi;
  }

  std::vector<double> y(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double xi = x[i];
    const double yi = z.empty() ? b[0] * xi : b[0] * xi + z[0];
    for (std::size_t k = 0; k + 1 < z.size(); ++k) {
      z[k] = b[k + 1] * xi + z[k + 1] - a[k + 1] * yi;
    }
    if (!z.empty()) {
      z[z.size() - 1] = b[n - 1] * xi - a[n - 1] * yi;
    }
    y[i] = yi;
  }
  return y;
}

std::vector<double> lfilter_zi(const IirFilter& f) {
  const std::size_t n = f.order();
  if (n < 2) return {};
  std::vector<double> b = f.b(), a = f.a();
  b.resize(n, 0.0);
  a.resize(n, 0.0);

  const Eigen::Index m = static_cast<Eigen::Index>(n - 1);
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(m, m);  // companion(a)^T
  for (Eigen::Index r = 0; r < m; ++r) {
    A(r, 0) = -a[static_cast<std::size_t>(r) + 1];
  }
  for (Eigen::Index c = 1; c < m; ++c) A(c - 1, c) = 1.0;

  Eigen::MatrixXd IminusA = Eigen::MatrixXd::Identity(m, m) - A;
  Eigen::VectorXd B(m);
  for (Eigen::Index r = 0; r < m; ++r) {
    B(r) = b[static_cast<std::size_t>(r) + 1] - a[static_cast<std::size_t>(r) + 1] * b[0];
  }
  Eigen::VectorXd zi = IminusA.colPivHouseholderQr().solve(B);
  std::vector<double> out(static_cast<std::size_t>(m));
  for (Eigen::Index r = 0; r < m; ++r) out[static_cast<std::size_t>(r)] = zi(r);
  return out;
}

std::vector<double> filtfilt(const IirFilter& f, const std::vector<double>& x) {
  const std::size_t pad = 3 * f.order();
  if (x.size() <= pad) {
    throw Error(Errc::signal_too_short, "filtfilt: need len(x) > 3 * max(len(b), len(a))");
  }
  if (f.is_identity()) return x;

  // odd reflection about the end points
  std::vector<double> ext;
  ext.reserve(x.size() + 2 * pad);
  for (std::size_t i = 0; i < pad; ++i) {
    ext.push_back(2.0 * x.front() - x[pad - i]);
  }
  ext.insert(ext.end(), x.begin(), x.end());
  for (std::size_t i = 0; i < pad; ++i) {
    ext.push_back(2.0 * x.back() - x[x.size() - 2 - i]);
  }

  const std::vector<double> zi = lfilter_zi(f);
  auto scaled = [&zi](double s) {
    std::vector<double> z(zi.size());
    for (std::size_t i = 0; i < z.size(); ++i) z[i] = zi[i] * s;
    return z;
  };

  std::vector<double> fwd = lfilter(f, ext, scaled(ext.front()));
  std::reverse(fwd.begin(), fwd.end());
  std::vector<double> bwd = lfilter(f, fwd, scaled(fwd.front()));
  std::reverse(bwd.begin(), bwd.end());

  return std::vector<double>(bwd.begin() + static_cast<std::ptrdiff_t>(pad),
                             bwd.end() - static_cast<std::ptrdiff_t>(pad));
}

}  // namespace nsedit
