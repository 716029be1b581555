#include "nsedit/attention.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

#include "nsedit/edit.hpp"
#include "nsedit/errors.hpp"
#include "nsedit/rng.hpp"
#include "nsedit/spectral.hpp"

namespace nsedit {

const char* embedding_source_name(EmbeddingSource s) {
  switch (s) {
    case EmbeddingSource::from_Xs: return "from_Xs";
    case EmbeddingSource::from_Xl: return "from_Xl";
    case EmbeddingSource::from_Xle: return "from_Xle";
  }
  return "?";
}

void AttentionBlock::check() const {
  if (num_heads < 1 || d_model < 1) {
    throw Error(Errc::invalid_argument, "AttentionBlock: need num_heads >= 1, d_model >= 1");
  }
  if (d_model % num_heads != 0 || d_k != d_model / num_heads) {
    throw Error(Errc::invalid_argument, "AttentionBlock: d_model must be divisible by heads");
  }
  if (static_cast<int>(w_q.size()) != num_heads || static_cast<int>(w_k.size()) != num_heads ||
      static_cast<int>(w_v.size()) != num_heads) {
    throw Error(Errc::dimension_mismatch, "AttentionBlock: per-head matrix count mismatch");
  }
  auto check_mat = [](const Eigen::MatrixXd& m, Eigen::Index rows, Eigen::Index cols) {
    if (m.rows() != rows || m.cols() != cols || !m.allFinite()) {
      throw Error(Errc::dimension_mismatch, "AttentionBlock: bad projection matrix");
    }
  };
  for (int h = 0; h < num_heads; ++h) {
    check_mat(w_q[static_cast<std::size_t>(h)], d_model, d_k);
    check_mat(w_k[static_cast<std::size_t>(h)], d_model, d_k);
    check_mat(w_v[static_cast<std::size_t>(h)], d_model, d_k);
  }
  check_mat(w_o, static_cast<Eigen::Index>(num_heads) * d_k, d_model);
}

AttentionBlock AttentionBlock::seeded(int num_heads, int d_model, std::uint64_t seed) {
  if (num_heads < 1 || d_model < 1 || d_model % num_heads != 0) {
    throw Error(Errc::invalid_argument, "AttentionBlock: d_model must be divisible by heads");
  }
  AttentionBlock b;
  b.num_heads = num_heads;
  b.d_model = d_model;
  b.d_k = d_model / num_heads;
  b.seed = seed;

  Rng rng(seed);
  const double scale = 1.0 / std::sqrt(static_cast<double>(d_model));
  auto fill = [&rng, scale](Eigen::MatrixXd& m, Eigen::Index rows, Eigen::Index cols) {
    m.resize(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r) {
      for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = scale * rng.gaussian();
    }
  };
  b.w_q.resize(static_cast<std::size_t>(num_heads));
  b.w_k.resize(static_cast<std::size_t>(num_heads));
  b.w_v.resize(static_cast<std::size_t>(num_heads));
  for (int h = 0; h < num_heads; ++h) {
    fill(b.w_q[static_cast<std::size_t>(h)], d_model, b.d_k);
    fill(b.w_k[static_cast<std::size_t>(h)], d_model, b.d_k);
    fill(b.w_v[static_cast<std::size_t>(h)], d_model, b.d_k);
  }
  fill(b.w_o, static_cast<Eigen::Index>(num_heads) * b.d_k, d_model);
  return b;
}

namespace {

constexpr char kBlockMagic[4] = {'I', 'C', 'L', 'R'};
constexpr std::int32_t kBlockVersion = 1;

void write_i32(std::ofstream& os, std::int32_t v) {
  unsigned char buf[4] = {static_cast<unsigned char>(v & 0xff),
                          static_cast<unsigned char>((v >> 8) & 0xff),
                          static_cast<unsigned char>((v >> 16) & 0xff),
                          static_cast<unsigned char>((v >> 24) & 0xff)};
  os.write(reinterpret_cast<const char*>(buf), 4);
}

std::int32_t read_i32(std::ifstream& in) {
  unsigned char buf[4];
  in.read(reinterpret_cast<char*>(buf), 4);
  return static_cast<std::int32_t>(buf[0] | (buf[1] << 8) | (buf[2] << 16) |
                                   (static_cast<std::uint32_t>(buf[3]) << 24));
}

void write_mat(std::ofstream& os, const Eigen::MatrixXd& m) {
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      const double v = m(r, c);
      std::uint64_t bits;
      std::memcpy(&bits, &v, 8);
      unsigned char buf[8];
      for (int i = 0; i < 8; ++i) buf[i] = static_cast<unsigned char>((bits >> (8 * i)) & 0xff);
      os.write(reinterpret_cast<const char*>(buf), 8);
    }
  }
}

void read_mat(std::ifstream& in, Eigen::MatrixXd& m, Eigen::Index rows, Eigen::Index cols) {
  m.resize(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) {
      unsigned char buf[8];
      in.read(reinterpret_cast<char*>(buf), 8);
      std::uint64_t bits = 0;
      for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(buf[i]) << (8 * i);
      double v;
      std::memcpy(&v, &bits, 8);
      m(r, c) = v;
    }
  }
}

}  // namespace

void save_attention_block(const AttentionBlock& block, const std::string& path) {
  block.check();
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw Error(Errc::io_error, "cannot open for writing: " + path);
  os.write(kBlockMagic, 4);
  write_i32(os, kBlockVersion);
  write_i32(os, block.num_heads);
  write_i32(os, block.d_model);
  write_i32(os, block.d_k);
  for (int h = 0; h < block.num_heads; ++h) {
    write_mat(os, block.w_q[static_cast<std::size_t>(h)]);
    write_mat(os, block.w_k[static_cast<std::size_t>(h)]);
    write_mat(os, block.w_v[static_cast<std::size_t>(h)]);
  }
  write_mat(os, block.w_o);
  if (!os) throw Error(Errc::io_error, "write failed: " + path);
}

AttentionBlock load_attention_block(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::file_not_found, path);
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kBlockMagic, 4) != 0) {
    throw Error(Errc::corrupt_header, path + ": not an attention block file");
  }
  const std::int32_t version = read_i32(in);
  if (version != kBlockVersion) {
    throw Error(Errc::unsupported_format, path + ": unsupported block version");
  }
  AttentionBlock b;
  b.num_heads = read_i32(in);
  b.d_model = read_i32(in);
  b.d_k = read_i32(in);
  if (!in || b.num_heads < 1 || b.d_model < 1 || b.d_k < 1 ||
      b.num_heads * b.d_k != b.d_model) {
    throw Error(Errc::corrupt_header, path + ": inconsistent block header");
  }
  b.w_q.resize(static_cast<std::size_t>(b.num_heads));
  b.w_k.resize(static_cast<std::size_t>(b.num_heads));
  b.w_v.resize(static_cast<std::size_t>(b.num_heads));
  for (int h = 0; h < b.num_heads; ++h) {
    read_mat(in, b.w_q[static_cast<std::size_t>(h)], b.d_model, b.d_k);
    read_mat(in, b.w_k[static_cast<std::size_t>(h)], b.d_model, b.d_k);
    read_mat(in, b.w_v[static_cast<std::size_t>(h)], b.d_model, b.d_k);
  }
  read_mat(in, b.w_o, static_cast<Eigen::Index>(b.num_heads) * b.d_k, b.d_model);
  if (!in) throw Error(Errc::corrupt_header, path + ": truncated block file");
  b.check();
  return b;
}

Eigen::MatrixXd embedding_projection(const EmbedConfig& cfg, int d_model) {
  if (d_model < 1) throw Error(Errc::invalid_argument, "embed: d_model must be >= 1");
  Rng rng(cfg.projection_seed);
  const double scale = 1.0 / std::sqrt(static_cast<double>(cfg.mel_bands));
  Eigen::MatrixXd p(cfg.mel_bands, d_model);
  for (Eigen::Index r = 0; r < p.rows(); ++r) {
    for (Eigen::Index c = 0; c < p.cols(); ++c) p(r, c) = scale * rng.gaussian();
  }
  return p;
}

FrameEmbedding embed(const Waveform& w, int d_model, EmbeddingSource source,
                     const EmbedConfig& cfg) {
  validate(w, "embed");
  if (w.samples.size() < cfg.frame_length) {
    throw Error(Errc::signal_too_short, "embed: signal shorter than one frame");
  }
  Spectrogram s = stft(w, cfg.frame_length, cfg.hop_length);
  MelSpectrogram mel = mel_spectrogram(s, cfg.mel_bands, cfg.fmin, cfg.fmax);

  FrameEmbedding e;
  e.vectors = mel.log_energies * embedding_projection(cfg, d_model);
  e.source = source;
  e.frame_length = cfg.frame_length;
  e.hop_length = cfg.hop_length;
  e.sample_rate = w.sample_rate;
  return e;
}

Eigen::MatrixXd attention_head(const Eigen::MatrixXd& q, const Eigen::MatrixXd& k,
                               const Eigen::MatrixXd& v) {
  if (q.cols() != k.cols() || k.rows() != v.rows()) {
    throw Error(Errc::dimension_mismatch, "attention_head: Q/K/V shapes inconsistent");
  }
  if (!q.allFinite() || !k.allFinite() || !v.allFinite()) {
    throw Error(Errc::invalid_argument, "attention_head: non-finite input");
  }
  const double inv_sqrt_dk = 1.0 / std::sqrt(static_cast<double>(k.cols()));
  Eigen::MatrixXd logits = q * k.transpose() * inv_sqrt_dk;
  for (Eigen::Index r = 0; r < logits.rows(); ++r) {
    const double mx = logits.row(r).maxCoeff();
    Eigen::ArrayXd ex = (logits.row(r).array() - mx).exp();
    logits.row(r) = (ex / ex.sum()).matrix();
  }
  return logits * v;
}

namespace {

Eigen::MatrixXd multi_head_output(const Eigen::MatrixXd& xq, const Eigen::MatrixXd& xkv,
                                  const AttentionBlock& block) {
  const Eigen::Index n = xq.rows();
  Eigen::MatrixXd concat(n, static_cast<Eigen::Index>(block.num_heads) * block.d_k);
  for (int h = 0; h < block.num_heads; ++h) {
    const auto& wq = block.w_q[static_cast<std::size_t>(h)];
    const auto& wk = block.w_k[static_cast<std::size_t>(h)];
    const auto& wv = block.w_v[static_cast<std::size_t>(h)];
    concat.middleCols(static_cast<Eigen::Index>(h) * block.d_k, block.d_k) =
        attention_head(xq * wq, xkv * wk, xkv * wv);
  }
  return xq + concat * block.w_o;
}

}  // namespace

FrameEmbedding multi_head_refine(const FrameEmbedding& xs_emb, const FrameEmbedding& xl_emb,
                                 const AttentionBlock& block) {
  block.check();
  if (xs_emb.d_model() != block.d_model || xl_emb.d_model() != block.d_model) {
    throw Error(Errc::dimension_mismatch, "multi_head_refine: embedding width != d_model");
  }
  FrameEmbedding out;
  out.vectors = multi_head_output(xs_emb.vectors, xl_emb.vectors, block);
  out.source = EmbeddingSource::from_Xs;
  out.frame_length = xs_emb.frame_length;
  out.hop_length = xs_emb.hop_length;
  out.sample_rate = xs_emb.sample_rate;
  return out;
}

Waveform reconstruct(const FrameEmbedding& refined, const Waveform& reference,
                     const EmbedConfig& cfg) {
  validate(reference, "reconstruct");
  if (refined.source != EmbeddingSource::from_Xs) {
    throw Error(Errc::invalid_argument, "reconstruct: refined embedding must be tagged from_Xs");
  }
  if (refined.frame_length != cfg.frame_length || refined.hop_length != cfg.hop_length ||
      refined.sample_rate != reference.sample_rate) {
    throw Error(Errc::geometry_mismatch, "reconstruct: frame geometry differs");
  }
  if (reference.samples.size() < cfg.frame_length) {
    throw Error(Errc::signal_too_short, "reconstruct: reference shorter than one frame");
  }

  // mel-space gain, computed on the unpadded geometry
  Spectrogram ref_spec = stft(reference, cfg.frame_length, cfg.hop_length);
  if (ref_spec.frames() != refined.frames()) {
    throw Error(Errc::geometry_mismatch, "reconstruct: frame count differs from reference");
  }
  MelSpectrogram ref_mel = mel_spectrogram(ref_spec, cfg.mel_bands, cfg.fmin, cfg.fmax);
  const Eigen::MatrixXd projection = embedding_projection(cfg, refined.d_model());

  // right pseudo-inverse of the wide projection
  Eigen::MatrixXd ppt = projection * projection.transpose();
  Eigen::LLT<Eigen::MatrixXd> llt(ppt);
  if (llt.info() != Eigen::Success) {
    throw Error(Errc::singular_system, "reconstruct: projection not pseudo-invertible");
  }
  Eigen::MatrixXd target_logmel =
      llt.solve(projection * refined.vectors.transpose()).transpose();  // frames x bands

  const double max_gain = std::pow(10.0, 12.0 / 20.0);  // +12 dB amplitude
  Eigen::MatrixXd band_gain =
      ((target_logmel - ref_mel.log_energies) / 2.0).array().exp().matrix();
  band_gain = band_gain.array().min(max_gain).max(1.0 / max_gain).matrix();

  MelFilterbank bank(cfg.mel_bands, cfg.fmin, cfg.fmax, reference.sample_rate,
                     cfg.frame_length);
  const Eigen::MatrixXd& w = bank.weights();  // bands x bins
  Eigen::VectorXd bin_support = w.colwise().sum();

  // process a padded copy so overlap-add has full window coverage everywhere
  const std::size_t hop = cfg.hop_length;
  const std::size_t pad = ((cfg.frame_length + hop - 1) / hop) * hop;
  Waveform padded;
  padded.sample_rate = reference.sample_rate;
  padded.samples.assign(reference.samples.size() + 2 * pad, 0.0);
  std::copy(reference.samples.begin(), reference.samples.end(),
            padded.samples.begin() + static_cast<std::ptrdiff_t>(pad));

  Spectrogram spec = stft(padded, cfg.frame_length, cfg.hop_length);
  const Eigen::Index pad_frames = static_cast<Eigen::Index>(pad / hop);
  const Eigen::Index unpadded_frames = static_cast<Eigen::Index>(refined.frames());

  for (Eigen::Index t = 0; t < static_cast<Eigen::Index>(spec.frames()); ++t) {
    Eigen::Index u = std::clamp<Eigen::Index>(t - pad_frames, 0, unpadded_frames - 1);
    for (Eigen::Index b = 0; b < static_cast<Eigen::Index>(spec.bins()); ++b) {
      double gain = 1.0;
      if (bin_support(b) > 1e-12) {
        gain = w.col(b).dot(band_gain.row(u).transpose()) / bin_support(b);
        gain = std::clamp(gain, 1.0 / max_gain, max_gain);
      }
      spec.magnitudes(t, b) *= gain;
    }
  }

  Waveform out = istft(spec);
  std::vector<double> cropped(reference.samples.size());
  for (std::size_t i = 0; i < cropped.size(); ++i) cropped[i] = out.samples[pad + i];
  return Waveform(std::move(cropped), reference.sample_rate);
}

namespace {

// loops the source segment with raised-cosine seams until it reaches len
std::vector<double> loop_fill(const std::vector<double>& src, std::size_t len,
                              std::size_t fade, int sample_rate) {
  if (len == 0) return {};
  if (src.empty()) return std::vector<double>(len, 0.0);
  Waveform acc(std::vector<double>(src), sample_rate);
  const Waveform empty(std::vector<double>{}, sample_rate);
  while (acc.samples.size() < len) {
    const std::size_t f = std::min({fade, acc.samples.size() / 2, src.size() / 2});
    acc = crossfade_splice(acc, empty, Waveform(std::vector<double>(src), sample_rate),
                           1e3 * static_cast<double>(f) / sample_rate);
  }
  acc.samples.resize(len);
  return acc.samples;
}

}  // namespace

Waveform recombine(const Waveform& x_e, const Waveform& x_n, std::size_t edit_start,
                   double fade_ms) {
  if (!x_e.samples.empty() && !x_n.samples.empty() && x_e.sample_rate != x_n.sample_rate) {
    throw Error(Errc::sample_rate_mismatch, "recombine");
  }
  const std::size_t len_e = x_e.samples.size();
  const std::size_t len_n = x_n.samples.size();

  Waveform noise = x_n;
  noise.sample_rate = x_e.sample_rate;
  if (len_e != len_n) {
    if (edit_start == kNoEditPoint) {
      throw Error(Errc::invalid_argument,
                  "recombine: lengths differ; an edit point is required to reconcile the noise");
    }
    const std::size_t fade =
        static_cast<std::size_t>(std::llround(fade_ms * 1e-3 * x_e.sample_rate));
    const std::size_t m = std::min(edit_start, len_n);
    if (len_e > len_n) {
      // insertion: grow the noise track by loop-splicing local material
      const std::size_t gap = len_e - len_n;
      const std::size_t f = std::min({fade, m, len_n - m});
      const std::size_t filler_len = gap + 2 * f;
      std::size_t src_len = std::min(len_n, std::max(filler_len, static_cast<std::size_t>(
                                                         x_e.sample_rate / 10)));
      std::size_t src_begin = m >= src_len ? m - src_len : 0;
      std::vector<double> src(noise.samples.begin() + static_cast<std::ptrdiff_t>(src_begin),
                              noise.samples.begin() + static_cast<std::ptrdiff_t>(
                                                          std::min(len_n, src_begin + src_len)));
      Waveform filler(loop_fill(src, filler_len, fade, noise.sample_rate), noise.sample_rate);
      Waveform head(std::vector<double>(noise.samples.begin(),
                                        noise.samples.begin() + static_cast<std::ptrdiff_t>(m)),
                    noise.sample_rate);
      Waveform tail(std::vector<double>(noise.samples.begin() + static_cast<std::ptrdiff_t>(m),
                                        noise.samples.end()),
                    noise.sample_rate);
      noise = crossfade_splice(head, filler, tail,
                               1e3 * static_cast<double>(f) / noise.sample_rate);
    } else {
      // deletion: cut [m, m + removed) with a single crossfade
      const std::size_t removed = len_n - len_e;
      const std::size_t cut_begin = std::min(m, len_n - removed);
      const std::size_t f = std::min({fade, cut_begin == 0 ? static_cast<std::size_t>(0)
                                                           : cut_begin,
                                      len_n - cut_begin - removed});
      Waveform head(
          std::vector<double>(noise.samples.begin(),
                              noise.samples.begin() + static_cast<std::ptrdiff_t>(cut_begin + f)),
          noise.sample_rate);
      Waveform tail(std::vector<double>(
                        noise.samples.begin() + static_cast<std::ptrdiff_t>(cut_begin + removed),
                        noise.samples.end()),
                    noise.sample_rate);
      const Waveform empty(std::vector<double>{}, noise.sample_rate);
      noise = crossfade_splice(head, empty, tail,
                               1e3 * static_cast<double>(f) / noise.sample_rate);
    }
  }

  if (noise.samples.size() != len_e) {
    throw Error(Errc::length_mismatch, "recombine: noise reconciliation failed");
  }
  Waveform y;
  y.sample_rate = x_e.sample_rate;
  y.samples.resize(len_e);
  for (std::size_t i = 0; i < len_e; ++i) {
    y.samples[i] = x_e.samples[i] + noise.samples[i];
  }
  return y;
}

RefinerGradients refine_loss_and_gradients(const Eigen::MatrixXd& xq, const Eigen::MatrixXd& xkv,
                                           const Eigen::MatrixXd& target,
                                           const AttentionBlock& block) {
  block.check();
  if (xq.cols() != block.d_model || xkv.cols() != block.d_model || target.cols() != block.d_model ||
      target.rows() != xq.rows()) {
    throw Error(Errc::dimension_mismatch, "refine_loss_and_gradients: shape mismatch");
  }
  const Eigen::Index n = xq.rows();
  const Eigen::Index dk = block.d_k;
  const double inv_sqrt_dk = 1.0 / std::sqrt(static_cast<double>(dk));

  // forward, keeping per-head activations
  std::vector<Eigen::MatrixXd> qs(static_cast<std::size_t>(block.num_heads));
  std::vector<Eigen::MatrixXd> ks(static_cast<std::size_t>(block.num_heads));
  std::vector<Eigen::MatrixXd> vs(static_cast<std::size_t>(block.num_heads));
  std::vector<Eigen::MatrixXd> attn(static_cast<std::size_t>(block.num_heads));
  Eigen::MatrixXd concat(n, static_cast<Eigen::Index>(block.num_heads) * dk);
  for (int h = 0; h < block.num_heads; ++h) {
    const std::size_t hs = static_cast<std::size_t>(h);
    qs[hs] = xq * block.w_q[hs];
    ks[hs] = xkv * block.w_k[hs];
    vs[hs] = xkv * block.w_v[hs];
    Eigen::MatrixXd logits = qs[hs] * ks[hs].transpose() * inv_sqrt_dk;
    for (Eigen::Index r = 0; r < logits.rows(); ++r) {
      const double mx = logits.row(r).maxCoeff();
      Eigen::ArrayXd ex = (logits.row(r).array() - mx).exp();
      logits.row(r) = (ex / ex.sum()).matrix();
    }
    attn[hs] = std::move(logits);  // row-stochastic weights
    concat.middleCols(static_cast<Eigen::Index>(h) * dk, dk) = attn[hs] * vs[hs];
  }
  Eigen::MatrixXd out = xq + concat * block.w_o;
  Eigen::MatrixXd diff = out - target;

  RefinerGradients g;
  const double denom = static_cast<double>(n) * static_cast<double>(block.d_model);
  g.loss = diff.squaredNorm() / denom;

  Eigen::MatrixXd d_out = 2.0 * diff / denom;
  g.d_w_o = concat.transpose() * d_out;
  Eigen::MatrixXd d_concat = d_out * block.w_o.transpose();

  g.d_w_q.resize(static_cast<std::size_t>(block.num_heads));
  g.d_w_k.resize(static_cast<std::size_t>(block.num_heads));
  g.d_w_v.resize(static_cast<std::size_t>(block.num_heads));
  for (int h = 0; h < block.num_heads; ++h) {
    const std::size_t hs = static_cast<std::size_t>(h);
    Eigen::MatrixXd d_head = d_concat.middleCols(static_cast<Eigen::Index>(h) * dk, dk);
    Eigen::MatrixXd d_attn = d_head * vs[hs].transpose();          // n x m
    Eigen::MatrixXd d_v = attn[hs].transpose() * d_head;           // m x dk
    // softmax backward, row-wise
    Eigen::MatrixXd d_logits(d_attn.rows(), d_attn.cols());
    for (Eigen::Index r = 0; r < d_attn.rows(); ++r) {
      const double dot = d_attn.row(r).dot(attn[hs].row(r));
      d_logits.row(r) =
          (attn[hs].row(r).array() * (d_attn.row(r).array() - dot)).matrix();
    }
    Eigen::MatrixXd d_q = d_logits * ks[hs] * inv_sqrt_dk;
    Eigen::MatrixXd d_k = d_logits.transpose() * qs[hs] * inv_sqrt_dk;
    g.d_w_q[hs] = xq.transpose() * d_q;
    g.d_w_k[hs] = xkv.transpose() * d_k;
    g.d_w_v[hs] = xkv.transpose() * d_v;
  }
  return g;
}

namespace {

struct EmbeddedPair {
  Eigen::MatrixXd noisy, reference, clean;
};

std::vector<EmbeddedPair> embed_pairs(const std::vector<RefinerPair>& pairs,
                                      const AttentionBlock& block, const EmbedConfig& cfg) {
  if (pairs.empty()) {
    throw Error(Errc::empty_training_set, "train_refiner: no pairs");
  }
  std::vector<EmbeddedPair> out;
  out.reserve(pairs.size());
  for (const auto& p : pairs) {
    EmbeddedPair e;
    e.noisy = embed(p.noisy, block.d_model, EmbeddingSource::from_Xs, cfg).vectors;
    e.reference = embed(p.reference, block.d_model, EmbeddingSource::from_Xle, cfg).vectors;
    e.clean = embed(p.clean, block.d_model, EmbeddingSource::from_Xs, cfg).vectors;
    if (e.noisy.rows() != e.clean.rows()) {
      throw Error(Errc::geometry_mismatch, "train_refiner: noisy/clean frame counts differ");
    }
    out.push_back(std::move(e));
  }
  return out;
}

}  // namespace

double refiner_loss(const std::vector<RefinerPair>& pairs, const AttentionBlock& block,
                    const EmbedConfig& cfg) {
  auto embedded = embed_pairs(pairs, block, cfg);
  double total = 0.0;
  for (const auto& e : embedded) {
    total += refine_loss_and_gradients(e.noisy, e.reference, e.clean, block).loss;
  }
  return total / static_cast<double>(embedded.size());
}

AttentionBlock train_refiner(const std::vector<RefinerPair>& pairs, const AttentionBlock& block,
                             int steps, double learning_rate, const EmbedConfig& cfg) {
  block.check();
  if (steps < 0) throw Error(Errc::invalid_argument, "train_refiner: steps must be >= 0");
  auto embedded = embed_pairs(pairs, block, cfg);

  AttentionBlock current = block;
  const double inv_pairs = 1.0 / static_cast<double>(embedded.size());
  for (int step = 0; step < steps; ++step) {
    std::vector<Eigen::MatrixXd> acc_q, acc_k, acc_v;
    Eigen::MatrixXd acc_o = Eigen::MatrixXd::Zero(current.w_o.rows(), current.w_o.cols());
    acc_q.assign(static_cast<std::size_t>(current.num_heads),
                 Eigen::MatrixXd::Zero(current.d_model, current.d_k));
    acc_k = acc_q;
    acc_v = acc_q;
    for (const auto& e : embedded) {
      RefinerGradients g = refine_loss_and_gradients(e.noisy, e.reference, e.clean, current);
      for (int h = 0; h < current.num_heads; ++h) {
        const std::size_t hs = static_cast<std::size_t>(h);
        acc_q[hs] += g.d_w_q[hs];
        acc_k[hs] += g.d_w_k[hs];
        acc_v[hs] += g.d_w_v[hs];
      }
      acc_o += g.d_w_o;
    }
    for (int h = 0; h < current.num_heads; ++h) {
      const std::size_t hs = static_cast<std::size_t>(h);
      current.w_q[hs] -= learning_rate * inv_pairs * acc_q[hs];
      current.w_k[hs] -= learning_rate * inv_pairs * acc_k[hs];
      current.w_v[hs] -= learning_rate * inv_pairs * acc_v[hs];
    }
    current.w_o -= learning_rate * inv_pairs * acc_o;
  }
  return current;
}

}  // namespace nsedit
