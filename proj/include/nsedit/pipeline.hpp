#ifndef NSEDIT_PIPELINE_HPP
#define NSEDIT_PIPELINE_HPP

#include <cstdint>
#include <map>
#include <string>

#include "nsedit/analysis.hpp"
#include "nsedit/attention.hpp"
#include "nsedit/config.hpp"
#include "nsedit/edit.hpp"
#include "nsedit/sbl.hpp"
#include "nsedit/separation.hpp"
#include "nsedit/waveform.hpp"

namespace nsedit {

struct PipelineConfig {
  // analysis geometry
  std::size_t frame_length = 1024;
  std::size_t hop_length = 256;
  int mel_bands = 80;
  double fmin = 0.0;
  double fmax = 8000.0;

  // suppression
  bool suppress_enabled = true;
  SblConfig sbl;
  std::size_t sbl_frame_length = 128;
  std::size_t sbl_hop_length = 32;
  IirFilter filter = IirFilter::default_suppression();

  SeparatorSpec separator;
  EditorSpec editor;

  // refinement
  bool refine_enabled = true;
  std::string kv_source = "Xle";  // or "Xl"
  std::string block_file;         // loaded when nonempty, else seeded
  std::uint64_t block_seed = 42;
  int d_model = 128;
  int num_heads = 8;
  std::uint64_t projection_seed = 0x6d656c70;

  // metrics
  std::string reference_path;  // optional clean reference (also feeds the oracle separator)
  double boundary_window_ms = 50.0;

  std::string output_dir;  // empty: keep artifacts in memory only

  static PipelineConfig from_config(const KeyValueConfig& kv);
  // canonical key/value view; its hash is the manifest's config hash
  KeyValueConfig to_config() const;
  EmbedConfig embed_config() const;
};

struct PipelineArtifacts {
  std::map<std::string, Waveform> waves;  // X, X_s, X_n, X_l, X_e_raw, X_le, X_e, Y
  MetricReport report;
  std::map<std::string, std::string> manifest;  // stage -> file path
  std::string config_hash;
};

// separate -> suppress -> edit x2 -> refine -> recombine -> analyze.
// Every stage output passes through float32 quantization so a chained
// run over intermediate WAV files reproduces the in-process result exactly.
// Stage failures are rethrown with the stage name in the message.
PipelineArtifacts run_pipeline(const Waveform& input, const EditScript& script,
                               const PipelineConfig& cfg);

// Computes the metric report the pipeline would produce for a set of staged
// waveforms (used by the analyze subcommand on standalone files).
MetricReport analyze_stages(const std::map<std::string, Waveform>& waves,
                            const PipelineConfig& cfg);

// write-to-temp-then-rename
void atomic_write_wav(const Waveform& w, const std::string& path, WavEncoding encoding);

}  // namespace nsedit

#endif
