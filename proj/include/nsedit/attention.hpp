#ifndef NSEDIT_ATTENTION_HPP
#define NSEDIT_ATTENTION_HPP

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "nsedit/waveform.hpp"

namespace nsedit {

// Multi-head cross-attention weights. Per-head projections are
// d_model x d_k; the output projection is (h * d_k) x d_model.
struct AttentionBlock {
  int num_heads = 8;
  int d_model = 128;
  int d_k = 16;
  std::uint64_t seed = 0;
  std::vector<Eigen::MatrixXd> w_q, w_k, w_v;
  Eigen::MatrixXd w_o;

  // Gaussian entries scaled by 1/sqrt(d_model), deterministic in the seed.
  static AttentionBlock seeded(int num_heads, int d_model, std::uint64_t seed);
  void check() const;
};

void save_attention_block(const AttentionBlock& block, const std::string& path);
AttentionBlock load_attention_block(const std::string& path);

enum class EmbeddingSource { from_Xs, from_Xl, from_Xle };

const char* embedding_source_name(EmbeddingSource s);

struct FrameEmbedding {
  Eigen::MatrixXd vectors;  // frames x d_model
  EmbeddingSource source = EmbeddingSource::from_Xs;
  std::size_t frame_length = 1024;
  std::size_t hop_length = 256;
  int sample_rate = 16000;

  std::size_t frames() const { return static_cast<std::size_t>(vectors.rows()); }
  int d_model() const { return static_cast<int>(vectors.cols()); }
};

struct EmbedConfig {
  std::size_t frame_length = 1024;
  std::size_t hop_length = 256;
  int mel_bands = 80;
  double fmin = 0.0;
  double fmax = 8000.0;
  std::uint64_t projection_seed = 0x6d656c70;  // embedding projection matrix seed
};

// Fixed seeded projection from log-mel space to d_model. Deterministic in
// (mel_bands, d_model, seed).
Eigen::MatrixXd embedding_projection(const EmbedConfig& cfg, int d_model);

// Log-mel frames linearly projected to d_model.
FrameEmbedding embed(const Waveform& w, int d_model,
                     EmbeddingSource source = EmbeddingSource::from_Xs,
                     const EmbedConfig& cfg = {});

// softmax(Q K^T / sqrt(d_k)) V with max-subtracted, row-stochastic softmax.
Eigen::MatrixXd attention_head(const Eigen::MatrixXd& q, const Eigen::MatrixXd& k,
                               const Eigen::MatrixXd& v);

// Per-head Q from xs_emb, K/V from xl_emb, heads concatenated, projected by
// w_o, residual added: out = xs_emb + MultiHead(...). Tagged from_Xs.
FrameEmbedding multi_head_refine(const FrameEmbedding& xs_emb, const FrameEmbedding& xl_emb,
                                 const AttentionBlock& block);

// Maps a refined embedding back to audio as a bounded spectral gain mask on
// the reference: the embedding is pseudo-inverted to log-mel, the log-energy
// delta against the reference becomes per-bin amplitude gains clamped to
// +-12 dB, applied to the reference STFT with its own phase.
Waveform reconstruct(const FrameEmbedding& refined, const Waveform& reference,
                     const EmbedConfig& cfg = {});

constexpr std::size_t kNoEditPoint = static_cast<std::size_t>(-1);

// Y = X_e + X_n. When lengths differ the noise track is reconciled at the
// edit point first: insertions loop-splice a copy of the local noise window
// into the gap, deletions cut the same range, both with raised-cosine
// crossfades. The edit point is required whenever lengths differ.
Waveform recombine(const Waveform& x_e, const Waveform& x_n,
                   std::size_t edit_start = kNoEditPoint, double fade_ms = 10.0);

struct RefinerGradients {
  double loss = 0.0;
  std::vector<Eigen::MatrixXd> d_w_q, d_w_k, d_w_v;
  Eigen::MatrixXd d_w_o;
};

// Mean-squared-error loss of multi_head_refine(xq, xkv) against target, with
// analytic gradients through the softmax/matmul chain.
RefinerGradients refine_loss_and_gradients(const Eigen::MatrixXd& xq,
                                           const Eigen::MatrixXd& xkv,
                                           const Eigen::MatrixXd& target,
                                           const AttentionBlock& block);

struct RefinerPair {
  Waveform noisy;      // query source (separated speech at inference time)
  Waveform reference;  // key/value source (the suppressed signal)
  Waveform clean;      // regression target
};

// Plain gradient descent on the embedding-space MSE across the pairs.
// steps == 0 returns the block unchanged.
AttentionBlock train_refiner(const std::vector<RefinerPair>& pairs, const AttentionBlock& block,
                             int steps, double learning_rate, const EmbedConfig& cfg = {});

// Mean embedding-space loss of the block over the pairs (the quantity
// train_refiner descends).
double refiner_loss(const std::vector<RefinerPair>& pairs, const AttentionBlock& block,
                    const EmbedConfig& cfg = {});

}  // namespace nsedit

#endif
