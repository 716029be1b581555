#include "nsedit/sbl.hpp"

#include <algorithm>
#include <cmath>
#include <thread>

#include "nsedit/errors.hpp"
#include "nsedit/spectral.hpp"

namespace nsedit {

void SblConfig::check() const {
  if (lambda <= 0.0 || epsilon <= 0.0 || delta <= 0.0) {
    throw Error(Errc::invalid_argument, "SblConfig: lambda, epsilon, delta must be positive");
  }
  if (max_iterations < 1) {
    throw Error(Errc::invalid_argument, "SblConfig: max_iterations must be >= 1");
  }
  if (oversampling < 1.0) {
    throw Error(Errc::invalid_argument, "SblConfig: oversampling must be >= 1");
  }
}

Dictionary::Dictionary(Eigen::MatrixXd atoms, DictionaryKind kind)
    : atoms_(std::move(atoms)), kind_(kind) {
  if (atoms_.rows() < 1 || atoms_.cols() < 1) {
    throw Error(Errc::invalid_dimension, "Dictionary: empty atom matrix");
  }
  if (kind_ != DictionaryKind::identity && atoms_.cols() < atoms_.rows()) {
    throw Error(Errc::invalid_dimension, "Dictionary: fewer atoms than signal dimensions");
  }
  for (Eigen::Index j = 0; j < atoms_.cols(); ++j) {
    const double norm = atoms_.col(j).norm();
    if (norm <= 0.0) {
      throw Error(Errc::invalid_dimension, "Dictionary: zero atom");
    }
    atoms_.col(j) /= norm;
  }
  gram_ = atoms_.transpose() * atoms_;
}

Dictionary Dictionary::build(std::size_t signal_dim, double oversampling, DictionaryKind kind) {
  if (signal_dim < 1) {
    throw Error(Errc::invalid_dimension, "build_dictionary: signal_dim must be >= 1");
  }
  const Eigen::Index n = static_cast<Eigen::Index>(signal_dim);
  switch (kind) {
    case DictionaryKind::identity:
      return Dictionary(Eigen::MatrixXd::Identity(n, n), kind);
    case DictionaryKind::overcomplete_dct: {
      if (oversampling < 1.0) {
        throw Error(Errc::invalid_dimension, "build_dictionary: oversampling must be >= 1");
      }
      const Eigen::Index m = static_cast<Eigen::Index>(
          std::llround(oversampling * static_cast<double>(signal_dim)));
      Eigen::MatrixXd d(n, m);
      // DCT-IV style atoms on an oversampled frequency grid
      for (Eigen::Index j = 0; j < m; ++j) {
        for (Eigen::Index i = 0; i < n; ++i) {
          d(i, j) = std::cos(M_PI * (static_cast<double>(i) + 0.5) *
                             (static_cast<double>(j) + 0.5) / static_cast<double>(m));
        }
      }
      return Dictionary(std::move(d), kind);
    }
    case DictionaryKind::custom:
      throw Error(Errc::invalid_argument, "build_dictionary: custom kind needs an atom matrix");
  }
  throw Error(Errc::invalid_argument, "build_dictionary: unknown kind");
}

Dictionary Dictionary::custom(Eigen::MatrixXd atoms) {
  return Dictionary(std::move(atoms), DictionaryKind::custom);
}

namespace {

// Cholesky with additive jitter fallback. Returns false if the system stays
// indefinite even after jitter.
bool factor_spd(Eigen::LLT<Eigen::MatrixXd>& llt, const Eigen::MatrixXd& a) {
  llt.compute(a);
  if (llt.info() == Eigen::Success) return true;
  const double jitter = 1e-10 * a.trace() / static_cast<double>(a.rows());
  Eigen::MatrixXd nudged = a;
  for (int attempt = 0; attempt < 3; ++attempt) {
    const double scale = jitter * std::pow(10.0, attempt);
    nudged.diagonal().array() += scale;
    llt.compute(nudged);
    if (llt.info() == Eigen::Success) return true;
  }
  return false;
}

Eigen::MatrixXd system_matrix(const Dictionary& dict, const Eigen::VectorXd& gamma,
                              double lambda) {
  Eigen::MatrixXd a = dict.gram() / lambda;
  a.diagonal() += gamma.cwiseInverse();
  return a;
}

}  // namespace

SblState sbl_iterate(const SblState& state, const Dictionary& dict, const Eigen::VectorXd& x,
                     const SblConfig& cfg) {
  cfg.check();
  const Eigen::Index m = static_cast<Eigen::Index>(dict.num_atoms());
  if (state.gamma.size() != m || state.mu.size() != m) {
    throw Error(Errc::dimension_mismatch, "sbl_iterate: state size != num_atoms");
  }
  if (x.size() != static_cast<Eigen::Index>(dict.signal_dim())) {
    throw Error(Errc::dimension_mismatch, "sbl_iterate: signal size != signal_dim");
  }
  if ((state.gamma.array() <= 0.0).any()) {
    throw Error(Errc::invalid_argument, "sbl_iterate: gamma must be strictly positive");
  }

  SblState next;
  next.gamma = (state.mu.cwiseAbs().array() + cfg.epsilon).inverse();

  const Eigen::MatrixXd a = system_matrix(dict, state.gamma, cfg.lambda);
  Eigen::LLT<Eigen::MatrixXd> llt;
  if (!factor_spd(llt, a)) {
    throw Error(Errc::singular_system, "sbl_iterate: posterior system not positive definite");
  }
  next.sigma = llt.solve(Eigen::MatrixXd::Identity(m, m));
  next.sigma = ((next.sigma + next.sigma.transpose()) / 2.0).eval();
  next.mu = llt.solve(dict.atoms().transpose() * x / cfg.lambda);
  next.iteration = state.iteration + 1;
  return next;
}

namespace {

bool gamma_converged(const Eigen::VectorXd& prev, const Eigen::VectorXd& next, double delta) {
  double worst = 0.0;
  for (Eigen::Index i = 0; i < prev.size(); ++i) {
    const double denom = std::max(std::abs(prev[i]), 1e-300);
    worst = std::max(worst, std::abs(next[i] - prev[i]) / denom);
  }
  return worst < delta;
}

}  // namespace

SblResult sbl_solve(const Eigen::VectorXd& x, const Dictionary& dict, const SblConfig& cfg,
                    const SblObserver& observer) {
  cfg.check();
  if (!x.allFinite()) {
    throw Error(Errc::invalid_argument, "sbl_solve: input contains NaN/Inf");
  }
  if (x.size() != static_cast<Eigen::Index>(dict.signal_dim())) {
    throw Error(Errc::dimension_mismatch, "sbl_solve: signal size != signal_dim");
  }
  const Eigen::Index m = static_cast<Eigen::Index>(dict.num_atoms());

  SblState state;
  state.gamma = Eigen::VectorXd::Ones(m);
  state.mu = dict.atoms().transpose() * x;  // correlation init
  state.sigma = Eigen::MatrixXd::Identity(m, m);
  state.iteration = 0;

  SblResult result;
  if (observer) {
    for (int t = 0; t < cfg.max_iterations; ++t) {
      SblState next = sbl_iterate(state, dict, x, cfg);
      observer(state, next);
      const bool done = gamma_converged(state.gamma, next.gamma, cfg.delta);
      state = std::move(next);
      if (done) {
        result.converged = true;
        break;
      }
    }
  } else {
    // same update without materializing sigma
    const Eigen::VectorXd rhs = dict.atoms().transpose() * x / cfg.lambda;
    Eigen::LLT<Eigen::MatrixXd> llt;
    for (int t = 0; t < cfg.max_iterations; ++t) {
      Eigen::VectorXd gamma_next = (state.mu.cwiseAbs().array() + cfg.epsilon).inverse();
      const Eigen::MatrixXd a = system_matrix(dict, state.gamma, cfg.lambda);
      if (!factor_spd(llt, a)) {
        throw Error(Errc::singular_system, "sbl_solve: posterior system not positive definite");
      }
      Eigen::VectorXd mu_next = llt.solve(rhs);
      const bool done = gamma_converged(state.gamma, gamma_next, cfg.delta);
      state.gamma = std::move(gamma_next);
      state.mu = std::move(mu_next);
      state.iteration += 1;
      if (done) {
        result.converged = true;
        break;
      }
    }
  }
  result.mu = state.mu;
  result.iterations = state.iteration;
  return result;
}

Waveform suppress(const Waveform& x_s, const SblConfig& cfg, const IirFilter& filter,
                  std::size_t frame_length, std::size_t hop_length) {
  validate(x_s, "suppress");
  cfg.check();
  if (hop_length == 0 || hop_length > frame_length) {
    throw Error(Errc::invalid_hop, "suppress: need 0 < hop <= frame_length");
  }
  const std::size_t len = x_s.samples.size();
  if (len == 0) return x_s;

  const Dictionary dict = Dictionary::build(
      frame_length, cfg.dictionary_kind == DictionaryKind::identity ? 1.0 : cfg.oversampling,
      cfg.dictionary_kind);

  // pad by a full frame on both ends so every output sample has complete
  // window coverage in the overlap-add
  const std::size_t pad = frame_length;
  const std::size_t padded_len = len + 2 * pad;
  std::vector<double> padded(padded_len, 0.0);
  std::copy(x_s.samples.begin(), x_s.samples.end(), padded.begin() + static_cast<std::ptrdiff_t>(pad));

  std::size_t frames = padded_len >= frame_length ? 1 + (padded_len - frame_length) / hop_length : 0;
  if (padded_len >= frame_length && (padded_len - frame_length) % hop_length != 0) frames += 1;

  const std::vector<double> window = hann_window(frame_length);
  std::vector<Eigen::VectorXd> recon(frames);

  std::exception_ptr first_error;
  std::mutex error_mutex;
  auto solve_range = [&](std::size_t begin, std::size_t end) {
    try {
      Eigen::VectorXd frame(static_cast<Eigen::Index>(frame_length));
      for (std::size_t t = begin; t < end; ++t) {
        const std::size_t start = t * hop_length;
        bool silent = true;
        for (std::size_t i = 0; i < frame_length; ++i) {
          const std::size_t idx = start + i;
          const double v = idx < padded_len ? padded[idx] * window[i] : 0.0;
          frame[static_cast<Eigen::Index>(i)] = v;
          if (v != 0.0) silent = false;
        }
        if (silent) {
          recon[t] = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(frame_length));
          continue;
        }
        SblResult r = sbl_solve(frame, dict, cfg);
        recon[t] = dict.atoms() * r.mu;
      }
    } catch (...) {
      std::lock_guard<std::mutex> lock(error_mutex);
      if (!first_error) first_error = std::current_exception();
    }
  };

  const std::size_t hw = std::max<std::size_t>(1, std::thread::hardware_concurrency());
  const std::size_t workers = std::min(hw, std::max<std::size_t>(1, frames));
  if (workers <= 1 || frames <= 1) {
    solve_range(0, frames);
  } else {
    std::vector<std::thread> pool;
    const std::size_t chunk = (frames + workers - 1) / workers;
    for (std::size_t k = 0; k < workers; ++k) {
      const std::size_t begin = k * chunk;
      const std::size_t end = std::min(frames, begin + chunk);
      if (begin >= end) break;
      pool.emplace_back(solve_range, begin, end);
    }
    for (auto& th : pool) th.join();
  }
  if (first_error) std::rethrow_exception(first_error);

  // weighted overlap-add, deterministic accumulation order
  std::vector<double> acc(padded_len, 0.0), norm(padded_len, 0.0);
  for (std::size_t t = 0; t < frames; ++t) {
    const std::size_t start = t * hop_length;
    for (std::size_t i = 0; i < frame_length && start + i < padded_len; ++i) {
      acc[start + i] += recon[t][static_cast<Eigen::Index>(i)] * window[i];
      norm[start + i] += window[i] * window[i];
    }
  }
  std::vector<double> recovered(len);
  for (std::size_t i = 0; i < len; ++i) {
    const double n = norm[pad + i];
    recovered[i] = n > 1e-12 ? acc[pad + i] / n : acc[pad + i];
  }

  std::vector<double> filtered = filtfilt(filter, recovered);
  return Waveform(std::move(filtered), x_s.sample_rate);
}

}  // namespace nsedit
