#include "nsedit/pipeline.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>

#include "nsedit/errors.hpp"

namespace nsedit {

namespace {

std::string format_double(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

std::string join_doubles(const std::vector<double>& v) {
  std::ostringstream os;
  os.precision(17);
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) os << ',';
    os << v[i];
  }
  return os.str();
}

DictionaryKind dictionary_kind_from_string(const std::string& s) {
  if (s == "overcomplete_dct") return DictionaryKind::overcomplete_dct;
  if (s == "identity") return DictionaryKind::identity;
  if (s == "custom") return DictionaryKind::custom;
  throw Error(Errc::config_error, "unknown dictionary kind: " + s);
}

const char* dictionary_kind_name(DictionaryKind k) {
  switch (k) {
    case DictionaryKind::overcomplete_dct: return "overcomplete_dct";
    case DictionaryKind::identity: return "identity";
    case DictionaryKind::custom: return "custom";
  }
  return "?";
}

const char* separator_kind_name(SeparatorKind k) {
  switch (k) {
    case SeparatorKind::oracle: return "oracle";
    case SeparatorKind::spectral_subtraction: return "spectral_subtraction";
    case SeparatorKind::external: return "external";
  }
  return "?";
}

}  // namespace

PipelineConfig PipelineConfig::from_config(const KeyValueConfig& kv) {
  PipelineConfig cfg;
  cfg.frame_length = static_cast<std::size_t>(kv.get_int("audio.frame_length", 1024));
  cfg.hop_length = static_cast<std::size_t>(kv.get_int("audio.hop_length", 256));
  cfg.mel_bands = static_cast<int>(kv.get_int("audio.mel_bands", 80));
  cfg.fmin = kv.get_double("audio.fmin", 0.0);
  cfg.fmax = kv.get_double("audio.fmax", 8000.0);

  cfg.suppress_enabled = kv.get_bool("suppress.enabled", true);
  cfg.sbl.lambda = kv.get_double("sbl.lambda", 1e-2);
  cfg.sbl.epsilon = kv.get_double("sbl.epsilon", 1e-6);
  cfg.sbl.delta = kv.get_double("sbl.delta", 1e-4);
  cfg.sbl.max_iterations = static_cast<int>(kv.get_int("sbl.max_iterations", 100));
  cfg.sbl.dictionary_kind =
      dictionary_kind_from_string(kv.get("sbl.dictionary", "overcomplete_dct"));
  cfg.sbl.oversampling = kv.get_double("sbl.oversampling", 2.0);
  cfg.sbl_frame_length = static_cast<std::size_t>(kv.get_int("sbl.frame_length", 128));
  cfg.sbl_hop_length = static_cast<std::size_t>(kv.get_int("sbl.hop_length", 32));

  if (kv.has("filter.b") || kv.has("filter.a")) {
    std::vector<double> b = kv.get_doubles("filter.b");
    std::vector<double> a = kv.get_doubles("filter.a");
    if (b.empty() || a.empty()) {
      throw Error(Errc::config_error, "filter.b and filter.a must both be given");
    }
    cfg.filter = IirFilter(std::move(b), std::move(a));
  }

  cfg.separator.kind = separator_kind_from_string(kv.get("separator.kind", "spectral_subtraction"));
  for (const char* key : {"percentile", "oversubtraction", "frame_length", "hop_length",
                          "command", "timeout_s", "workdir", "reference"}) {
    const std::string full = std::string("separator.") + key;
    if (kv.has(full)) cfg.separator.parameters[key] = kv.get(full, "");
  }

  const std::string editor_kind = kv.get("editor.kind", "splice");
  if (editor_kind == "splice") {
    cfg.editor.kind = EditorKind::splice;
  } else if (editor_kind == "external") {
    cfg.editor.kind = EditorKind::external;
  } else {
    throw Error(Errc::config_error, "unknown editor kind: " + editor_kind);
  }
  cfg.editor.crossfade_ms = kv.get_double("editor.crossfade_ms", 10.0);
  cfg.editor.command = kv.get("editor.command", "");
  cfg.editor.timeout_s = kv.get_double("editor.timeout_s", 600.0);
  cfg.editor.workdir = kv.get("editor.workdir", "");

  cfg.refine_enabled = kv.get_bool("refine.enabled", true);
  cfg.kv_source = kv.get("refine.kv_source", "Xle");
  if (cfg.kv_source != "Xle" && cfg.kv_source != "Xl") {
    throw Error(Errc::config_error, "refine.kv_source must be Xle or Xl");
  }
  cfg.block_file = kv.get("refine.block_file", "");
  cfg.block_seed = static_cast<std::uint64_t>(kv.get_int("refine.block_seed", 42));
  cfg.d_model = static_cast<int>(kv.get_int("refine.d_model", 128));
  cfg.num_heads = static_cast<int>(kv.get_int("refine.heads", 8));
  cfg.projection_seed =
      static_cast<std::uint64_t>(kv.get_int("refine.projection_seed", 0x6d656c70));

  cfg.reference_path = kv.get("analysis.reference", "");
  cfg.boundary_window_ms = kv.get_double("analysis.boundary_window_ms", 50.0);
  cfg.output_dir = kv.get("output.dir", "");
  return cfg;
}

KeyValueConfig PipelineConfig::to_config() const {
  KeyValueConfig kv;
  kv.set("audio.frame_length", std::to_string(frame_length));
  kv.set("audio.hop_length", std::to_string(hop_length));
  kv.set("audio.mel_bands", std::to_string(mel_bands));
  kv.set("audio.fmin", format_double(fmin));
  kv.set("audio.fmax", format_double(fmax));

  kv.set("suppress.enabled", suppress_enabled ? "true" : "false");
  kv.set("sbl.lambda", format_double(sbl.lambda));
  kv.set("sbl.epsilon", format_double(sbl.epsilon));
  kv.set("sbl.delta", format_double(sbl.delta));
  kv.set("sbl.max_iterations", std::to_string(sbl.max_iterations));
  kv.set("sbl.dictionary", dictionary_kind_name(sbl.dictionary_kind));
  kv.set("sbl.oversampling", format_double(sbl.oversampling));
  kv.set("sbl.frame_length", std::to_string(sbl_frame_length));
  kv.set("sbl.hop_length", std::to_string(sbl_hop_length));
  kv.set("filter.b", join_doubles(filter.b()));
  kv.set("filter.a", join_doubles(filter.a()));

  kv.set("separator.kind", separator_kind_name(separator.kind));
  for (const auto& [k, v] : separator.parameters) kv.set("separator." + k, v);

  kv.set("editor.kind", editor.kind == EditorKind::splice ? "splice" : "external");
  kv.set("editor.crossfade_ms", format_double(editor.crossfade_ms));
  if (!editor.command.empty()) kv.set("editor.command", editor.command);

  kv.set("refine.enabled", refine_enabled ? "true" : "false");
  kv.set("refine.kv_source", kv_source);
  if (!block_file.empty()) kv.set("refine.block_file", block_file);
  kv.set("refine.block_seed", std::to_string(block_seed));
  kv.set("refine.d_model", std::to_string(d_model));
  kv.set("refine.heads", std::to_string(num_heads));
  kv.set("refine.projection_seed", std::to_string(projection_seed));

  if (!reference_path.empty()) kv.set("analysis.reference", reference_path);
  kv.set("analysis.boundary_window_ms", format_double(boundary_window_ms));
  return kv;
}

EmbedConfig PipelineConfig::embed_config() const {
  EmbedConfig e;
  e.frame_length = frame_length;
  e.hop_length = hop_length;
  e.mel_bands = mel_bands;
  e.fmin = fmin;
  e.fmax = fmax;
  e.projection_seed = projection_seed;
  return e;
}

void atomic_write_wav(const Waveform& w, const std::string& path, WavEncoding encoding) {
  const std::string tmp = path + ".tmp";
  write_wav(w, tmp, encoding);
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw Error(Errc::io_error, "rename failed: " + path + ": " + ec.message());
}

namespace {

template <typename Fn>
auto run_stage(const char* stage, Fn&& fn) {
  try {
    return fn();
  } catch (const Error& e) {
    throw Error(e.code(), std::string("stage ") + stage + ": " + e.what());
  } catch (const std::exception& e) {
    throw Error(Errc::backend_failure, std::string("stage ") + stage + ": " + e.what());
  }
}

// junction positions of the edit in the output timeline
std::vector<std::size_t> edit_boundaries(const EditScript& script) {
  const std::size_t m = script.region_start;
  switch (script.operation) {
    case EditOp::replacement:
      return {m, m + (script.replacement_audio ? script.replacement_audio->samples.size() : 0)};
    case EditOp::insertion:
      return {m, m + (script.replacement_audio ? script.replacement_audio->samples.size() : 0)};
    case EditOp::deletion:
      return {m};
  }
  return {};
}

}  // namespace

MetricReport analyze_stages(const std::map<std::string, Waveform>& waves,
                            const PipelineConfig& cfg) {
  MetricReport report;
  Waveform reference;
  if (!cfg.reference_path.empty()) reference = read_wav(cfg.reference_path);

  for (const auto& [stage, wave] : waves) {
    StageMetrics m;
    if (wave.samples.size() >= cfg.frame_length) {
      Spectrogram s = stft(wave, cfg.frame_length, cfg.hop_length);
      m.stats = spectral_stats(s);
    }
    if (!reference.samples.empty() && reference.samples.size() == wave.samples.size() &&
        reference.sample_rate == wave.sample_rate) {
      m.snr_db = snr_db(wave, reference);
    }
    report.stages[stage] = std::move(m);
  }
  return report;
}

PipelineArtifacts run_pipeline(const Waveform& input, const EditScript& script,
                               const PipelineConfig& cfg) {
  validate(input, "run_pipeline");
  PipelineArtifacts art;
  const KeyValueConfig canonical = cfg.to_config();
  art.config_hash = canonical.hash();

  const Waveform x = quantize_float32(input);
  art.waves["X"] = x;

  SeparatorSpec separator = cfg.separator;
  if (separator.kind == SeparatorKind::oracle && !separator.oracle_reference &&
      !cfg.reference_path.empty() && separator.parameters.count("reference") == 0) {
    separator.parameters["reference"] = cfg.reference_path;
  }

  SeparationResult sep = run_stage("separate", [&] { return separate(x, separator); });
  Waveform x_s = quantize_float32(sep.speech);
  // re-derive the complement from the quantized speech so persisted artifacts
  // keep speech + noise == X
  Waveform x_n;
  x_n.sample_rate = x.sample_rate;
  x_n.samples.resize(x.samples.size());
  for (std::size_t i = 0; i < x.samples.size(); ++i) {
    x_n.samples[i] = x.samples[i] - x_s.samples[i];
  }
  x_n = quantize_float32(x_n);
  art.waves["X_s"] = x_s;
  art.waves["X_n"] = x_n;

  Waveform x_l =
      cfg.suppress_enabled
          ? quantize_float32(run_stage("suppress", [&] {
              return suppress(x_s, cfg.sbl, cfg.filter, cfg.sbl_frame_length, cfg.sbl_hop_length);
            }))
          : x_s;
  art.waves["X_l"] = x_l;

  Waveform x_e_raw = quantize_float32(
      run_stage("edit", [&] { return apply_edit(x_s, script, cfg.editor); }));
  Waveform x_le = quantize_float32(
      run_stage("edit", [&] { return apply_edit(x_l, script, cfg.editor); }));
  art.waves["X_e_raw"] = x_e_raw;
  art.waves["X_le"] = x_le;

  Waveform x_e = x_e_raw;
  if (cfg.refine_enabled) {
    x_e = quantize_float32(run_stage("refine", [&] {
      const EmbedConfig ecfg = cfg.embed_config();
      AttentionBlock block = cfg.block_file.empty()
                                 ? AttentionBlock::seeded(cfg.num_heads, cfg.d_model, cfg.block_seed)
                                 : load_attention_block(cfg.block_file);
      const Waveform& kv_wave = cfg.kv_source == "Xl" ? x_l : x_le;
      FrameEmbedding q = embed(x_e_raw, block.d_model, EmbeddingSource::from_Xs, ecfg);
      FrameEmbedding kv = embed(kv_wave, block.d_model,
                                cfg.kv_source == "Xl" ? EmbeddingSource::from_Xl
                                                      : EmbeddingSource::from_Xle,
                                ecfg);
      FrameEmbedding refined = multi_head_refine(q, kv, block);
      return reconstruct(refined, x_e_raw, ecfg);
    }));
  }
  art.waves["X_e"] = x_e;

  Waveform y = quantize_float32(run_stage(
      "recombine", [&] { return recombine(x_e, x_n, script.region_start); }));
  art.waves["Y"] = y;

  run_stage("analyze", [&] {
    art.report = analyze_stages(art.waves, cfg);
    art.report.config_hash = art.config_hash;
    const auto boundaries = edit_boundaries(script);
    for (const char* stage : {"X_e_raw", "X_le", "X_e", "Y"}) {
      const Waveform& wave = art.waves[stage];
      double acc = 0.0;
      int counted = 0;
      for (std::size_t b : boundaries) {
        const std::size_t window = static_cast<std::size_t>(
            std::llround(cfg.boundary_window_ms * 1e-3 * wave.sample_rate));
        if (window == 0 || b < window || b + window > wave.samples.size()) continue;
        acc += boundary_discontinuity(wave, b, cfg.boundary_window_ms, cfg.frame_length,
                                      cfg.hop_length, cfg.mel_bands);
        ++counted;
      }
      if (counted > 0) art.report.stages[stage].boundary_discontinuity = acc / counted;
    }
    return 0;
  });

  if (!cfg.output_dir.empty()) {
    run_stage("persist", [&] {
      namespace fs = std::filesystem;
      fs::create_directories(cfg.output_dir);
      for (const auto& [stage, wave] : art.waves) {
        const fs::path p = fs::path(cfg.output_dir) / (stage + std::string(".wav"));
        atomic_write_wav(wave, p.string(), WavEncoding::float32);
        art.manifest[stage] = p.string();
      }
      art.report.write_text((fs::path(cfg.output_dir) / "report.txt").string());
      art.report.write_csv((fs::path(cfg.output_dir) / "report.csv").string());

      std::ostringstream manifest;
      manifest << "config_hash=" << art.config_hash << '\n';
      for (const auto& [stage, path] : art.manifest) {
        manifest << stage << '=' << fs::path(path).filename().string() << '\n';
      }
      const fs::path mpath = fs::path(cfg.output_dir) / "manifest.txt";
      const std::string tmp = mpath.string() + ".tmp";
      std::ofstream os(tmp, std::ios::trunc);
      os << manifest.str();
      os.close();
      fs::rename(tmp, mpath);
      const fs::path cpath = fs::path(cfg.output_dir) / "config.cfg";
      std::ofstream cs(cpath.string(), std::ios::trunc);
      cs << canonical.canonical_text();
      return 0;
    });
  }
  return art;
}

}  // namespace nsedit
