// Command line front end: stage-by-stage subcommands plus the end-to-end
// pipeline, all driven by the same key = value config file.
#include <CLI11.hpp>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>

#include "nsedit/analysis.hpp"
#include "nsedit/attention.hpp"
#include "nsedit/config.hpp"
#include "nsedit/edit.hpp"
#include "nsedit/errors.hpp"
#include "nsedit/fixtures.hpp"
#include "nsedit/pipeline.hpp"
#include "nsedit/sbl.hpp"
#include "nsedit/separation.hpp"
#include "nsedit/spectral.hpp"

namespace {

using namespace nsedit;

PipelineConfig load_pipeline_config(const std::string& config_path) {
  std::string path = config_path;
  if (path.empty()) {
    if (const char* env = std::getenv("NSEDIT_CONFIG")) path = env;
  }
  if (path.empty()) return PipelineConfig{};
  return PipelineConfig::from_config(KeyValueConfig::parse_file(path));
}

EditScript build_script(const std::string& op, std::size_t start, std::size_t len,
                        const std::string& replacement_path, const std::string& orig_transcript,
                        const std::string& target_transcript) {
  EditScript script;
  script.operation = edit_op_from_string(op);
  script.region_start = start;
  script.region_len = len;
  if (!replacement_path.empty()) script.replacement_audio = read_wav(replacement_path);
  script.orig_transcript = orig_transcript;
  script.target_transcript = target_transcript;
  return script;
}

int run_cli(int argc, char** argv) {
  CLI::App app{"noise-resilient speech editing pipeline"};
  app.require_subcommand(1);

  std::string config_path;
  app.add_option("--config", config_path, "key = value config file (or $NSEDIT_CONFIG)");

  // fixtures
  auto* fixtures_cmd = app.add_subcommand("fixtures", "generate the synthetic test corpus");
  std::string fx_out = "fixtures";
  int fx_count = 6;
  std::uint64_t fx_seed = 1;
  double fx_duration = 1.0;
  fixtures_cmd->add_option("--out", fx_out, "output directory");
  fixtures_cmd->add_option("--count", fx_count, "number of fixture pairs");
  fixtures_cmd->add_option("--seed", fx_seed, "corpus seed");
  fixtures_cmd->add_option("--duration", fx_duration, "voiced duration in seconds");

  // separate
  auto* separate_cmd = app.add_subcommand("separate", "split input into speech and noise");
  std::string sep_in, sep_speech = "X_s.wav", sep_noise = "X_n.wav";
  separate_cmd->add_option("--input", sep_in)->required();
  separate_cmd->add_option("--speech-out", sep_speech);
  separate_cmd->add_option("--noise-out", sep_noise);

  // suppress
  auto* suppress_cmd = app.add_subcommand("suppress", "SBL recovery plus zero-phase filtering");
  std::string sup_in, sup_out = "X_l.wav";
  suppress_cmd->add_option("--input", sup_in)->required();
  suppress_cmd->add_option("--out", sup_out);
  std::string sup_filter_b, sup_filter_a;
  suppress_cmd->add_option("--filter-b", sup_filter_b, "comma separated numerator");
  suppress_cmd->add_option("--filter-a", sup_filter_a, "comma separated denominator");

  // edit
  auto* edit_cmd = app.add_subcommand("edit", "apply an edit script");
  std::string ed_in, ed_out = "edited.wav", ed_op = "replacement", ed_rep;
  std::string ed_orig_tr, ed_target_tr;
  std::size_t ed_start = 0, ed_len = 0;
  edit_cmd->add_option("--input", ed_in)->required();
  edit_cmd->add_option("--out", ed_out);
  edit_cmd->add_option("--op", ed_op, "insertion | replacement | deletion");
  edit_cmd->add_option("--edit-start", ed_start, "region start sample");
  edit_cmd->add_option("--edit-len", ed_len, "region length in samples");
  edit_cmd->add_option("--replacement", ed_rep, "replacement audio (wav)");
  edit_cmd->add_option("--orig-transcript", ed_orig_tr);
  edit_cmd->add_option("--target-transcript", ed_target_tr);

  // refine
  auto* refine_cmd = app.add_subcommand("refine", "in-context refinement of an edited signal");
  std::string rf_in, rf_kv, rf_out = "X_e.wav", rf_block;
  refine_cmd->add_option("--input", rf_in, "edited separated speech (query source)")->required();
  refine_cmd->add_option("--kv", rf_kv, "suppressed signal (key/value source)")->required();
  refine_cmd->add_option("--out", rf_out);
  refine_cmd->add_option("--block", rf_block, "attention block file (else seeded)");

  // recombine
  auto* recombine_cmd = app.add_subcommand("recombine", "add the noise track back");
  std::string rc_edited, rc_noise, rc_out = "Y.wav";
  std::size_t rc_edit_start = kNoEditPoint;
  recombine_cmd->add_option("--edited", rc_edited)->required();
  recombine_cmd->add_option("--noise", rc_noise)->required();
  recombine_cmd->add_option("--out", rc_out);
  recombine_cmd->add_option("--edit-start", rc_edit_start,
                            "edit point, required when lengths differ");

  // analyze
  auto* analyze_cmd = app.add_subcommand("analyze", "spectral stats, SNR, seam score");
  std::string an_in, an_ref, an_csv, an_text, an_spec;
  std::size_t an_boundary = kNoEditPoint;
  double an_window_ms = 50.0;
  analyze_cmd->add_option("--input", an_in)->required();
  analyze_cmd->add_option("--reference", an_ref, "clean reference for SNR");
  analyze_cmd->add_option("--boundary", an_boundary, "seam position in samples");
  analyze_cmd->add_option("--window-ms", an_window_ms);
  analyze_cmd->add_option("--csv", an_csv, "CSV report path (default stdout)");
  analyze_cmd->add_option("--text", an_text, "key/value report path");
  analyze_cmd->add_option("--export-spectrogram", an_spec, "portable matrix file");

  // pipeline
  auto* pipeline_cmd = app.add_subcommand("pipeline", "run every stage end to end");
  std::string pl_in, pl_out = "out", pl_op = "replacement", pl_rep, pl_ref;
  std::string pl_orig_tr, pl_target_tr;
  std::size_t pl_start = 0, pl_len = 0;
  pipeline_cmd->add_option("--input", pl_in)->required();
  pipeline_cmd->add_option("--out", pl_out, "artifact directory");
  pipeline_cmd->add_option("--op", pl_op, "insertion | replacement | deletion");
  pipeline_cmd->add_option("--edit-start", pl_start);
  pipeline_cmd->add_option("--edit-len", pl_len);
  pipeline_cmd->add_option("--replacement", pl_rep, "replacement audio (wav)");
  pipeline_cmd->add_option("--reference", pl_ref, "clean reference (oracle separator / SNR)");
  pipeline_cmd->add_option("--orig-transcript", pl_orig_tr);
  pipeline_cmd->add_option("--target-transcript", pl_target_tr);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);  // prints usage or help text
    return code == 0 ? 0 : 1;
  }

  try {
    if (fixtures_cmd->parsed()) {
      auto entries = generate_fixture_corpus(fx_out, fx_count, fx_seed, fx_duration);
      std::cout << "wrote " << entries.size() << " fixture pairs to " << fx_out << "\n";
      return 0;
    }

    PipelineConfig cfg = load_pipeline_config(config_path);

    if (separate_cmd->parsed()) {
      SeparatorSpec spec = cfg.separator;
      if (spec.kind == SeparatorKind::oracle && spec.parameters.count("reference") == 0 &&
          !cfg.reference_path.empty()) {
        spec.parameters["reference"] = cfg.reference_path;
      }
      SeparationResult r = separate(read_wav(sep_in), spec);
      atomic_write_wav(r.speech, sep_speech, WavEncoding::float32);
      atomic_write_wav(r.noise, sep_noise, WavEncoding::float32);
      return 0;
    }

    if (suppress_cmd->parsed()) {
      IirFilter filter = cfg.filter;
      if (!sup_filter_b.empty() || !sup_filter_a.empty()) {
        KeyValueConfig kv;
        kv.set("b", sup_filter_b);
        kv.set("a", sup_filter_a);
        filter = IirFilter(kv.get_doubles("b"), kv.get_doubles("a"));
      }
      Waveform out = suppress(read_wav(sup_in), cfg.sbl, filter, cfg.sbl_frame_length,
                              cfg.sbl_hop_length);
      atomic_write_wav(out, sup_out, WavEncoding::float32);
      return 0;
    }

    if (edit_cmd->parsed()) {
      EditScript script = build_script(ed_op, ed_start, ed_len, ed_rep, ed_orig_tr, ed_target_tr);
      Waveform out = apply_edit(read_wav(ed_in), script, cfg.editor);
      atomic_write_wav(out, ed_out, WavEncoding::float32);
      return 0;
    }

    if (refine_cmd->parsed()) {
      const EmbedConfig ecfg = cfg.embed_config();
      AttentionBlock block;
      if (!rf_block.empty()) {
        block = load_attention_block(rf_block);
      } else if (!cfg.block_file.empty()) {
        block = load_attention_block(cfg.block_file);
      } else {
        block = AttentionBlock::seeded(cfg.num_heads, cfg.d_model, cfg.block_seed);
      }
      Waveform input = read_wav(rf_in);
      FrameEmbedding q = embed(input, block.d_model, EmbeddingSource::from_Xs, ecfg);
      FrameEmbedding kv = embed(read_wav(rf_kv), block.d_model, EmbeddingSource::from_Xle, ecfg);
      Waveform out = reconstruct(multi_head_refine(q, kv, block), input, ecfg);
      atomic_write_wav(out, rf_out, WavEncoding::float32);
      return 0;
    }

    if (recombine_cmd->parsed()) {
      Waveform y = recombine(read_wav(rc_edited), read_wav(rc_noise), rc_edit_start);
      atomic_write_wav(y, rc_out, WavEncoding::float32);
      return 0;
    }

    if (analyze_cmd->parsed()) {
      Waveform input = read_wav(an_in);
      PipelineConfig acfg = cfg;
      acfg.reference_path = an_ref;
      std::map<std::string, Waveform> waves{{"input", input}};
      MetricReport report = analyze_stages(waves, acfg);
      if (an_boundary != kNoEditPoint) {
        report.stages["input"].boundary_discontinuity = boundary_discontinuity(
            input, an_boundary, an_window_ms, acfg.frame_length, acfg.hop_length,
            acfg.mel_bands);
      }
      if (!an_spec.empty() && input.samples.size() >= acfg.frame_length) {
        Spectrogram s = stft(input, acfg.frame_length, acfg.hop_length);
        write_matrix(an_spec, s.magnitudes, s.sample_rate, s.hop_length);
      }
      if (!an_text.empty()) report.write_text(an_text);
      if (an_csv.empty()) {
        const std::string tmp =
            (std::filesystem::temp_directory_path() / "nsedit_report.csv").string();
        report.write_csv(tmp);
        std::ifstream in(tmp);
        std::cout << in.rdbuf();
        std::filesystem::remove(tmp);
      } else {
        report.write_csv(an_csv);
      }
      return 0;
    }

    if (pipeline_cmd->parsed()) {
      cfg.output_dir = pl_out;
      if (!pl_ref.empty()) cfg.reference_path = pl_ref;
      EditScript script = build_script(pl_op, pl_start, pl_len, pl_rep, pl_orig_tr, pl_target_tr);
      run_pipeline(read_wav(pl_in), script, cfg);
      std::cout << "artifacts written to " << pl_out << "\n";
      return 0;
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) { return run_cli(argc, argv); }
