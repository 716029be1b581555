#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>

#include "nsedit/attention.hpp"
#include "nsedit/errors.hpp"
#include "nsedit/fixtures.hpp"
#include "nsedit/rng.hpp"

using namespace nsedit;

namespace {

Eigen::MatrixXd seeded_matrix(std::uint64_t seed, Eigen::Index rows, Eigen::Index cols) {
  Rng rng(seed);
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = rng.gaussian();
  }
  return m;
}

}  // namespace

TEST_CASE("attention_head single-row case returns V's row") {
  Eigen::MatrixXd q(1, 3), k(1, 3), v(1, 2);
  q << 0.3, -0.7, 2.0;
  k << 1.0, 0.0, -1.0;
  v << 4.0, -5.0;
  Eigen::MatrixXd out = attention_head(q, k, v);
  CHECK(out(0, 0) == 4.0);
  CHECK(out(0, 1) == -5.0);
}

TEST_CASE("attention_head with identical V rows is that row") {
  Eigen::MatrixXd q = seeded_matrix(51, 4, 8);
  Eigen::MatrixXd k = seeded_matrix(52, 6, 8);
  Eigen::MatrixXd v(6, 3);
  for (int r = 0; r < 6; ++r) v.row(r) << 1.5, -2.0, 0.25;
  Eigen::MatrixXd out = attention_head(q, k, v);
  for (int r = 0; r < 4; ++r) {
    CHECK(out(r, 0) == doctest::Approx(1.5).epsilon(1e-12));
    CHECK(out(r, 1) == doctest::Approx(-2.0).epsilon(1e-12));
    CHECK(out(r, 2) == doctest::Approx(0.25).epsilon(1e-12));
  }
}

TEST_CASE("attention_head 2x2 hand-computed mixture") {
  Eigen::MatrixXd q = Eigen::MatrixXd::Identity(2, 2);
  Eigen::MatrixXd k = Eigen::MatrixXd::Identity(2, 2);
  Eigen::MatrixXd v(2, 2);
  v << 1.0, 0.0, 0.0, 2.0;
  Eigen::MatrixXd out = attention_head(q, k, v);
  // row 0 logits = [1, 0] / sqrt(2); softmax = [0.66975, 0.33025]
  CHECK(out(0, 0) == doctest::Approx(0.6698).epsilon(1e-4));
  CHECK(out(0, 1) == doctest::Approx(0.6604).epsilon(1e-4));
}

TEST_CASE("attention weights are row-stochastic and outputs stay in V's hull") {
  Eigen::MatrixXd q = seeded_matrix(53, 5, 8);
  Eigen::MatrixXd k = seeded_matrix(54, 7, 8);
  Eigen::MatrixXd v = seeded_matrix(55, 7, 4);
  Eigen::MatrixXd out = attention_head(q, k, v);
  for (Eigen::Index c = 0; c < v.cols(); ++c) {
    const double lo = v.col(c).minCoeff(), hi = v.col(c).maxCoeff();
    for (Eigen::Index r = 0; r < out.rows(); ++r) {
      CHECK(out(r, c) >= lo - 1e-9);
      CHECK(out(r, c) <= hi + 1e-9);
    }
  }

  // row-stochasticity, via constant-V probe: weights * ones == ones
  Eigen::MatrixXd ones = Eigen::MatrixXd::Ones(7, 1);
  Eigen::MatrixXd sums = attention_head(q, k, ones);
  for (Eigen::Index r = 0; r < sums.rows(); ++r) {
    CHECK(sums(r, 0) == doctest::Approx(1.0).epsilon(1e-9));
  }
}

TEST_CASE("attention is invariant to per-row logit offsets") {
  // adding one vector to every K row shifts each logit row by a constant
  Eigen::MatrixXd q = seeded_matrix(56, 5, 8);
  Eigen::MatrixXd k = seeded_matrix(57, 6, 8);
  Eigen::MatrixXd v = seeded_matrix(58, 6, 4);
  Eigen::RowVectorXd shift = 3.7 * Eigen::RowVectorXd::Ones(8);
  Eigen::MatrixXd k_shifted = k + Eigen::VectorXd::Ones(6) * shift;
  Eigen::MatrixXd a = attention_head(q, k, v);
  Eigen::MatrixXd b = attention_head(q, k_shifted, v);
  CHECK((a - b).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("attention is invariant to joint K/V row permutation") {
  Eigen::MatrixXd q = seeded_matrix(59, 5, 8);
  Eigen::MatrixXd k = seeded_matrix(60, 5, 8);
  Eigen::MatrixXd v = seeded_matrix(61, 5, 4);
  std::vector<int> perm = {3, 0, 4, 1, 2};
  Eigen::MatrixXd kp(5, 8), vp(5, 4);
  for (int r = 0; r < 5; ++r) {
    kp.row(r) = k.row(perm[static_cast<std::size_t>(r)]);
    vp.row(r) = v.row(perm[static_cast<std::size_t>(r)]);
  }
  Eigen::MatrixXd a = attention_head(q, k, v);
  Eigen::MatrixXd b = attention_head(q, kp, vp);
  CHECK((a - b).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("multi_head_refine: zero output projection leaves the residual path") {
  AttentionBlock block = AttentionBlock::seeded(4, 32, 7);
  block.w_o.setZero();
  FrameEmbedding xs;
  xs.vectors = seeded_matrix(62, 6, 32);
  FrameEmbedding xl;
  xl.vectors = seeded_matrix(63, 9, 32);
  FrameEmbedding out = multi_head_refine(xs, xl, block);
  CHECK((out.vectors - xs.vectors).cwiseAbs().maxCoeff() == 0.0);
  CHECK(out.source == EmbeddingSource::from_Xs);
  CHECK(out.frames() == 6);
}

TEST_CASE("multi_head_refine single head reduces to attention_head plus residual") {
  AttentionBlock block = AttentionBlock::seeded(1, 16, 8);
  FrameEmbedding xs;
  xs.vectors = seeded_matrix(64, 1, 16);
  FrameEmbedding xl;
  xl.vectors = seeded_matrix(65, 1, 16);
  FrameEmbedding out = multi_head_refine(xs, xl, block);
  Eigen::MatrixXd head =
      attention_head(xs.vectors * block.w_q[0], xl.vectors * block.w_k[0],
                     xl.vectors * block.w_v[0]);
  Eigen::MatrixXd expect = xs.vectors + head * block.w_o;
  CHECK((out.vectors - expect).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("multi_head_refine keeps the query frame count for any kv length") {
  AttentionBlock block = AttentionBlock::seeded(8, 128, 11);
  for (int m : {1, 4, 40}) {
    FrameEmbedding xs, xl;
    xs.vectors = seeded_matrix(66, 10, 128);
    xl.vectors = seeded_matrix(67, m, 128);
    CHECK(multi_head_refine(xs, xl, block).frames() == 10);
  }
}

TEST_CASE("embed: determinism, geometry law, silence") {
  FixturePair p = make_fixture_pair(71, 180.0, NoiseKind::white, 5.0, 0.4);
  EmbedConfig cfg;
  FrameEmbedding a = embed(p.noisy, 128, EmbeddingSource::from_Xs, cfg);
  FrameEmbedding b = embed(p.noisy, 128, EmbeddingSource::from_Xs, cfg);
  CHECK((a.vectors - b.vectors).cwiseAbs().maxCoeff() == 0.0);

  // aligned length: frames = 1 + (len - frame) / hop
  const std::size_t aligned = 1024 + 20 * 256;
  Waveform w(std::vector<double>(aligned, 0.0), 16000);
  FrameEmbedding e = embed(w, 64, EmbeddingSource::from_Xl, cfg);
  CHECK(e.frames() == 21);

  // silence embeds to identical rows (the projected log-floor vector)
  for (std::size_t t = 1; t < e.frames(); ++t) {
    CHECK((e.vectors.row(static_cast<Eigen::Index>(t)) - e.vectors.row(0))
              .cwiseAbs()
              .maxCoeff() == 0.0);
  }

  CHECK_THROWS_AS(embed(Waveform(std::vector<double>(100, 0.0), 16000), 64,
                        EmbeddingSource::from_Xs, cfg),
                  Error);
}

TEST_CASE("reconstruct: matching embedding gives unit gains") {
  FixturePair p = make_fixture_pair(72, 140.0, NoiseKind::white, 10.0, 0.5);
  EmbedConfig cfg;
  FrameEmbedding e = embed(p.clean, 128, EmbeddingSource::from_Xs, cfg);
  Waveform out = reconstruct(e, p.clean, cfg);
  REQUIRE(out.samples.size() == p.clean.samples.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < out.samples.size(); ++i) {
    const double d = out.samples[i] - p.clean.samples[i];
    acc += d * d;
  }
  CHECK(std::sqrt(acc / static_cast<double>(out.samples.size())) < 1e-4);
}

TEST_CASE("reconstruct: the -12 dB clamp scales RMS by about 0.25") {
  FixturePair p = make_fixture_pair(73, 200.0, NoiseKind::white, 10.0, 0.5);
  EmbedConfig cfg;
  FrameEmbedding e = embed(p.clean, 128, EmbeddingSource::from_Xs, cfg);
  // push the target log-energies far below the reference: gains clamp at -12 dB
  Eigen::MatrixXd target = Eigen::MatrixXd::Constant(
      static_cast<Eigen::Index>(e.frames()), cfg.mel_bands, -60.0);
  e.vectors = target * embedding_projection(cfg, 128);
  Waveform out = reconstruct(e, p.clean, cfg);
  const double ratio = rms(out) / rms(p.clean);
  CHECK(ratio == doctest::Approx(std::pow(10.0, -12.0 / 20.0)).epsilon(0.05));
}

TEST_CASE("reconstruct: silence reference stays silent") {
  EmbedConfig cfg;
  Waveform silent(std::vector<double>(1024 + 8 * 256, 0.0), 16000);
  FrameEmbedding e = embed(silent, 128, EmbeddingSource::from_Xs, cfg);
  Waveform out = reconstruct(e, silent, cfg);
  for (double v : out.samples) CHECK(v == 0.0);
}

TEST_CASE("reconstruct rejects mismatched geometry and tags") {
  FixturePair p = make_fixture_pair(74, 150.0, NoiseKind::white, 10.0, 0.4);
  EmbedConfig cfg;
  FrameEmbedding e = embed(p.clean, 128, EmbeddingSource::from_Xs, cfg);

  FrameEmbedding wrong_tag = e;
  wrong_tag.source = EmbeddingSource::from_Xl;
  CHECK_THROWS_AS(reconstruct(wrong_tag, p.clean, cfg), Error);

  FrameEmbedding wrong_geometry = e;
  wrong_geometry.hop_length = 128;
  CHECK_THROWS_AS(reconstruct(wrong_geometry, p.clean, cfg), Error);

  Waveform shorter = p.clean;
  shorter.samples.resize(shorter.samples.size() - 4000);
  CHECK_THROWS_AS(reconstruct(e, shorter, cfg), Error);
}

TEST_CASE("recombine equal lengths is the exact sample-wise sum") {
  FixturePair p = make_fixture_pair(75, 160.0, NoiseKind::pink, 0.0, 0.3);
  Waveform y = recombine(p.clean, p.noise);
  REQUIRE(y.samples.size() == p.clean.samples.size());
  for (std::size_t i = 0; i < y.samples.size(); ++i) {
    CHECK(y.samples[i] == p.noisy.samples[i]);  // exact on the fixture grid
  }

  Waveform zero_noise(std::vector<double>(p.clean.samples.size(), 0.0), 16000);
  Waveform same = recombine(p.clean, zero_noise);
  for (std::size_t i = 0; i < same.samples.size(); ++i) {
    CHECK(same.samples[i] == p.clean.samples[i]);
  }
}

TEST_CASE("recombine reconciles an insertion gap with local noise") {
  Rng rng(76);
  const std::size_t len = 24000, gap = 8000, m = 9000;
  std::vector<double> noise(len);
  for (auto& v : noise) v = 0.2 * rng.gaussian();
  Waveform x_n(noise, 16000);
  Waveform x_e(std::vector<double>(len + gap, 0.0), 16000);

  Waveform y = recombine(x_e, x_n, m);
  REQUIRE(y.samples.size() == len + gap);
  const std::size_t fade = 160;  // 10 ms
  for (std::size_t i = 0; i < m - fade; ++i) CHECK(y.samples[i] == x_n.samples[i]);
  for (std::size_t i = m + gap + fade; i < y.samples.size(); ++i) {
    CHECK(y.samples[i] == x_n.samples[i - gap]);
  }
  // the filled gap carries noise-scale material, not silence
  double acc = 0.0;
  for (std::size_t i = m; i < m + gap; ++i) acc += y.samples[i] * y.samples[i];
  CHECK(std::sqrt(acc / gap) > 0.05);
}

TEST_CASE("recombine reconciles a deletion cut") {
  Rng rng(77);
  const std::size_t len = 24000, removed = 6000, m = 10000;
  std::vector<double> noise(len);
  for (auto& v : noise) v = 0.2 * rng.gaussian();
  Waveform x_n(noise, 16000);
  Waveform x_e(std::vector<double>(len - removed, 0.0), 16000);

  Waveform y = recombine(x_e, x_n, m);
  REQUIRE(y.samples.size() == len - removed);
  for (std::size_t i = 0; i < m; ++i) CHECK(y.samples[i] == x_n.samples[i]);
  const std::size_t fade = 160;
  for (std::size_t i = m + fade; i < y.samples.size(); ++i) {
    CHECK(y.samples[i] == x_n.samples[i + removed]);
  }
}

TEST_CASE("recombine errors") {
  Waveform a(std::vector<double>(100, 0.1), 16000);
  Waveform b(std::vector<double>(100, 0.1), 8000);
  CHECK_THROWS_AS(recombine(a, b), Error);  // rate mismatch
  Waveform c(std::vector<double>(90, 0.1), 16000);
  CHECK_THROWS_AS(recombine(a, c), Error);  // lengths differ, no edit point
}

TEST_CASE("analytic gradients match central finite differences") {
  // 3-frame, h = 2, d_model = 8 seeded instance
  AttentionBlock block = AttentionBlock::seeded(2, 8, 123);
  Eigen::MatrixXd xq = seeded_matrix(81, 3, 8);
  Eigen::MatrixXd xkv = seeded_matrix(82, 4, 8);
  Eigen::MatrixXd target = seeded_matrix(83, 3, 8);

  RefinerGradients g = refine_loss_and_gradients(xq, xkv, target, block);

  const double h = 1e-5;
  double max_rel = 0.0;
  auto probe = [&](Eigen::MatrixXd& param, const Eigen::MatrixXd& grad) {
    for (Eigen::Index r = 0; r < param.rows(); ++r) {
      for (Eigen::Index c = 0; c < param.cols(); ++c) {
        const double save = param(r, c);
        param(r, c) = save + h;
        const double up = refine_loss_and_gradients(xq, xkv, target, block).loss;
        param(r, c) = save - h;
        const double down = refine_loss_and_gradients(xq, xkv, target, block).loss;
        param(r, c) = save;
        const double fd = (up - down) / (2.0 * h);
        const double denom = std::max({std::abs(fd), std::abs(grad(r, c)), 1e-8});
        max_rel = std::max(max_rel, std::abs(fd - grad(r, c)) / denom);
      }
    }
  };
  for (int head = 0; head < 2; ++head) {
    const std::size_t hs = static_cast<std::size_t>(head);
    probe(block.w_q[hs], g.d_w_q[hs]);
    probe(block.w_k[hs], g.d_w_k[hs]);
    probe(block.w_v[hs], g.d_w_v[hs]);
  }
  probe(block.w_o, g.d_w_o);
  CHECK(max_rel < 1e-4);
}

TEST_CASE("train_refiner: zero steps is the identity, training reduces loss") {
  std::vector<RefinerPair> pairs;
  for (int i = 0; i < 3; ++i) {
    FixturePair p = make_fixture_pair(90 + static_cast<std::uint64_t>(i), 140.0 + 20.0 * i,
                                      NoiseKind::white, 5.0, 0.4);
    RefinerPair rp;
    rp.noisy = p.noisy;
    rp.reference = p.clean;  // stand-in suppressed signal for this unit test
    rp.clean = p.clean;
    pairs.push_back(std::move(rp));
  }
  AttentionBlock block = AttentionBlock::seeded(2, 32, 5);

  AttentionBlock same = train_refiner(pairs, block, 0, 0.1);
  CHECK((same.w_o - block.w_o).cwiseAbs().maxCoeff() == 0.0);

  const double before = refiner_loss(pairs, block);
  AttentionBlock trained = train_refiner(pairs, block, 100, 1e-3);
  const double after = refiner_loss(pairs, trained);
  CHECK(after < before);

  CHECK_THROWS_AS(train_refiner({}, block, 5, 0.1), Error);
}

TEST_CASE("attention block file roundtrip") {
  AttentionBlock block = AttentionBlock::seeded(4, 32, 99);
  const std::string path =
      (std::filesystem::temp_directory_path() / "nsedit_block.iclr").string();
  save_attention_block(block, path);
  AttentionBlock back = load_attention_block(path);
  CHECK(back.num_heads == 4);
  CHECK(back.d_model == 32);
  CHECK(back.d_k == 8);
  for (int h = 0; h < 4; ++h) {
    const std::size_t hs = static_cast<std::size_t>(h);
    CHECK((back.w_q[hs] - block.w_q[hs]).cwiseAbs().maxCoeff() == 0.0);
    CHECK((back.w_k[hs] - block.w_k[hs]).cwiseAbs().maxCoeff() == 0.0);
    CHECK((back.w_v[hs] - block.w_v[hs]).cwiseAbs().maxCoeff() == 0.0);
  }
  CHECK((back.w_o - block.w_o).cwiseAbs().maxCoeff() == 0.0);
  std::remove(path.c_str());

  CHECK_THROWS_AS(load_attention_block(path), Error);
}
