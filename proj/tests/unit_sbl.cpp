#include <doctest.h>

#include <cmath>

#include "nsedit/analysis.hpp"
#include "nsedit/errors.hpp"
#include "nsedit/fixtures.hpp"
#include "nsedit/rng.hpp"
#include "nsedit/sbl.hpp"

using namespace nsedit;

TEST_CASE("dictionary construction invariants") {
  Dictionary id = Dictionary::build(4, 1.0, DictionaryKind::identity);
  CHECK(id.num_atoms() == 4);
  CHECK((id.atoms() - Eigen::MatrixXd::Identity(4, 4)).cwiseAbs().maxCoeff() == 0.0);

  Dictionary dct = Dictionary::build(8, 2.0, DictionaryKind::overcomplete_dct);
  CHECK(dct.signal_dim() == 8);
  CHECK(dct.num_atoms() == 16);
  for (Eigen::Index j = 0; j < 16; ++j) {
    CHECK(dct.atoms().col(j).norm() == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(dct.gram()(j, j) == doctest::Approx(1.0).epsilon(1e-9));
  }
  CHECK_THROWS_AS(Dictionary::build(0, 2.0, DictionaryKind::overcomplete_dct), Error);
}

TEST_CASE("sbl_iterate scalar hand-computed step") {
  Dictionary id = Dictionary::build(1, 1.0, DictionaryKind::identity);
  SblConfig cfg;
  cfg.lambda = 1.0;
  cfg.epsilon = 1e-6;

  SblState state;
  state.gamma = Eigen::VectorXd::Ones(1);
  state.mu = Eigen::VectorXd::Zero(1);
  state.sigma = Eigen::MatrixXd::Identity(1, 1);

  Eigen::VectorXd x(1);
  x << 2.0;
  SblState next = sbl_iterate(state, id, x, cfg);
  CHECK(next.sigma(0, 0) == doctest::Approx(0.5).epsilon(1e-12));  // (1 + 1)^-1
  CHECK(next.mu[0] == doctest::Approx(1.0).epsilon(1e-12));        // 0.5 * 2
  CHECK(next.iteration == 1);
  // the gamma a further step would use: 1/(|mu| + eps)
  SblState third = sbl_iterate(next, id, x, cfg);
  CHECK(third.gamma[0] == doctest::Approx(1.0 / (1.0 + 1e-6)).epsilon(1e-12));
}

TEST_CASE("sbl_iterate is linear in x at zero") {
  Dictionary dct = Dictionary::build(8, 2.0, DictionaryKind::overcomplete_dct);
  SblConfig cfg;
  SblState state;
  state.gamma = Eigen::VectorXd::Ones(16);
  state.mu = Eigen::VectorXd::Random(16);
  state.sigma = Eigen::MatrixXd::Identity(16, 16);
  SblState next = sbl_iterate(state, dct, Eigen::VectorXd::Zero(8), cfg);
  CHECK(next.mu.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("gamma update at mu = 0 hits 1/epsilon") {
  Dictionary id = Dictionary::build(4, 1.0, DictionaryKind::identity);
  SblConfig cfg;
  cfg.epsilon = 1e-6;
  SblState state;
  state.gamma = Eigen::VectorXd::Ones(4);
  state.mu = Eigen::VectorXd::Zero(4);
  state.sigma = Eigen::MatrixXd::Identity(4, 4);
  SblState next = sbl_iterate(state, id, Eigen::VectorXd::Zero(4), cfg);
  for (int i = 0; i < 4; ++i) CHECK(next.gamma[i] == doctest::Approx(1e6).epsilon(1e-12));
}

TEST_CASE("update identities hold on every logged iteration") {
  Dictionary dct = Dictionary::build(8, 2.0, DictionaryKind::overcomplete_dct);
  SblConfig cfg;
  cfg.lambda = 1e-2;
  Rng rng(21);
  Eigen::VectorXd x(8);
  for (int i = 0; i < 8; ++i) x[i] = rng.gaussian();

  int steps = 0;
  sbl_solve(x, dct, cfg, [&](const SblState& prev, const SblState& next) {
    ++steps;
    // gamma' (|mu| + eps) == 1 elementwise
    Eigen::ArrayXd identity = next.gamma.array() * (prev.mu.cwiseAbs().array() + cfg.epsilon);
    CHECK((identity - 1.0).abs().maxCoeff() < 1e-12);

    // (D^T D / lambda + diag(1/gamma)) mu' == D^T x / lambda
    Eigen::MatrixXd a = dct.gram() / cfg.lambda;
    a.diagonal() += prev.gamma.cwiseInverse();
    Eigen::VectorXd rhs = dct.atoms().transpose() * x / cfg.lambda;
    CHECK((a * next.mu - rhs).norm() <= 1e-8 * rhs.norm());

    // sigma is symmetric and positive definite
    CHECK((next.sigma - next.sigma.transpose()).cwiseAbs().maxCoeff() < 1e-10);
    Eigen::LLT<Eigen::MatrixXd> llt(next.sigma);
    CHECK(llt.info() == Eigen::Success);
  });
  CHECK(steps >= 2);
}

TEST_CASE("monotone shrinkage direction") {
  Dictionary dct = Dictionary::build(8, 2.0, DictionaryKind::overcomplete_dct);
  SblConfig cfg;
  Rng rng(22);
  Eigen::VectorXd x(8);
  for (int i = 0; i < 8; ++i) x[i] = rng.gaussian();

  std::vector<SblState> states;
  sbl_solve(x, dct, cfg, [&](const SblState& prev, const SblState& next) {
    if (states.empty()) states.push_back(prev);
    states.push_back(next);
  });
  // if |mu_i| decreased between consecutive states, the prior variance proxy
  // 1/gamma_i decreases at the next step (1/gamma' = |mu| + eps exactly)
  for (std::size_t t = 1; t + 1 < states.size(); ++t) {
    for (Eigen::Index i = 0; i < states[t].mu.size(); ++i) {
      if (std::abs(states[t].mu[i]) < std::abs(states[t - 1].mu[i])) {
        CHECK(1.0 / states[t + 1].gamma[i] < 1.0 / states[t].gamma[i]);
      }
    }
  }
}

TEST_CASE("solve: x = 0 converges immediately to mu = 0") {
  Dictionary dct = Dictionary::build(8, 2.0, DictionaryKind::overcomplete_dct);
  SblConfig cfg;
  SblResult r = sbl_solve(Eigen::VectorXd::Zero(8), dct, cfg);
  CHECK(r.converged);
  CHECK(r.iterations <= 2);
  CHECK(r.mu.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("solve: identity dictionary recovers the signal at small lambda") {
  Dictionary id = Dictionary::build(8, 1.0, DictionaryKind::identity);
  SblConfig cfg;
  cfg.lambda = 1e-4;
  Eigen::VectorXd x = Eigen::VectorXd::Zero(8);
  x[2] = 3.0;
  SblResult r = sbl_solve(x, id, cfg);
  CHECK(r.converged);
  CHECK((r.mu - x).cwiseAbs().maxCoeff() < 1e-2);
}

TEST_CASE("solve: single-atom signal is identified by the largest coefficient") {
  Dictionary dct = Dictionary::build(8, 2.0, DictionaryKind::overcomplete_dct);
  SblConfig cfg;
  cfg.lambda = 1e-3;
  for (int j = 0; j < 16; ++j) {
    Eigen::VectorXd x = 2.5 * dct.atoms().col(j);
    // exhaustive 1-sparse matching-pursuit oracle
    Eigen::Index oracle = 0;
    (dct.atoms().transpose() * x).cwiseAbs().maxCoeff(&oracle);
    CHECK(oracle == j);

    SblResult r = sbl_solve(x, dct, cfg);
    Eigen::Index argmax = 0;
    r.mu.cwiseAbs().maxCoeff(&argmax);
    CHECK(argmax == oracle);
  }
}

TEST_CASE("solve rejects non-finite input") {
  Dictionary id = Dictionary::build(4, 1.0, DictionaryKind::identity);
  Eigen::VectorXd bad(4);
  bad << 1.0, NAN, 0.0, 0.0;
  CHECK_THROWS_AS(sbl_solve(bad, id, SblConfig{}), Error);
}

TEST_CASE("suppress: silence stays silent, length preserved") {
  Waveform silent(std::vector<double>(4000, 0.0), 16000);
  SblConfig cfg;
  Waveform out = suppress(silent, cfg, IirFilter::identity(), 128, 32);
  REQUIRE(out.samples.size() == silent.samples.size());
  for (double v : out.samples) CHECK(v == 0.0);
}

TEST_CASE("suppress: degenerate configuration reduces to reconstruction") {
  // in-band tone, tiny lambda, identity dictionary, identity filter
  SblConfig cfg;
  cfg.lambda = 1e-8;
  cfg.dictionary_kind = DictionaryKind::identity;
  std::vector<double> s(4000);
  for (std::size_t i = 0; i < s.size(); ++i) {
    s[i] = 0.5 * std::sin(2.0 * M_PI * 500.0 * static_cast<double>(i) / 16000.0);
  }
  Waveform tone(s, 16000);
  Waveform out = suppress(tone, cfg, IirFilter::identity(), 128, 32);
  REQUIRE(out.samples.size() == tone.samples.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const double d = out.samples[i] - s[i];
    acc += d * d;
  }
  CHECK(std::sqrt(acc / static_cast<double>(s.size())) < 1e-3);
}

TEST_CASE("suppress improves SNR on a noisy harmonic fixture") {
  FixturePair p = make_fixture_pair(31, 170.0, NoiseKind::white, 0.0, 0.7);
  SblConfig cfg;
  cfg.max_iterations = 8;
  const double before = snr_db(p.noisy, p.clean);
  Waveform out = suppress(p.noisy, cfg, fixture_band_filter(), 128, 32);
  const double after = snr_db(out, p.clean);
  CHECK(std::abs(before) < 0.05);
  CHECK(after - before >= 5.0);
}

TEST_CASE("suppress is deterministic") {
  FixturePair p = make_fixture_pair(32, 140.0, NoiseKind::pink, 5.0, 0.3);
  SblConfig cfg;
  cfg.max_iterations = 6;
  Waveform a = suppress(p.noisy, cfg, IirFilter::default_suppression(), 128, 32);
  Waveform b = suppress(p.noisy, cfg, IirFilter::default_suppression(), 128, 32);
  REQUIRE(a.samples.size() == b.samples.size());
  for (std::size_t i = 0; i < a.samples.size(); ++i) CHECK(a.samples[i] == b.samples[i]);
}
