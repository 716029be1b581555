#ifndef NSEDIT_EDIT_HPP
#define NSEDIT_EDIT_HPP

#include <map>
#include <optional>
#include <string>

#include "nsedit/waveform.hpp"

namespace nsedit {

enum class EditOp { insertion, replacement, deletion };

EditOp edit_op_from_string(const std::string& s);
const char* edit_op_name(EditOp op);

// One edit: operate on samples [region_start, region_start + region_len).
// Insertion inserts at region_start (region_len ignored). Replacement and
// insertion need material: audio for the splice backend, a target transcript
// for external backends.
struct EditScript {
  std::size_t region_start = 0;
  std::size_t region_len = 0;
  EditOp operation = EditOp::replacement;
  std::optional<Waveform> replacement_audio;
  std::string orig_transcript;
  std::string target_transcript;
};

enum class EditorKind { splice, external };

struct EditorSpec {
  EditorKind kind = EditorKind::splice;
  double crossfade_ms = 10.0;          // splice backend
  std::string command;                 // external backend, with placeholders
  double timeout_s = 600.0;            // external backend
  std::string workdir;                 // external backend, optional
};

// Joins head + insert + tail with raised-cosine crossfades overlapping each
// junction; the complementary gains sum to one, so matched material passes
// through unchanged. Output length: head + insert + tail - 2 * fade samples
// (one junction, hence - fade, when insert is empty).
Waveform crossfade_splice(const Waveform& head, const Waveform& insert, const Waveform& tail,
                          double fade_ms);

// Applies the script with the configured backend. The splice backend keeps
// untouched samples bit-exact outside the fade ramps:
//   replacement: true crossfades at both junctions,
//                length = len - region_len + replacement - 2 * fade
//   insertion:   the insert is faded in/out at its own edges,
//                length = len + replacement
//   deletion:    boundary fade-out / fade-in over the kept material,
//                length = len - region_len
Waveform apply_edit(const Waveform& x, const EditScript& script, const EditorSpec& spec);

// External process contract shared by separation/edit adapters: run a shell
// command with placeholder substitution and a wall-clock timeout.
// Returns the exit code; throws BackendFailure on timeout or spawn failure.
int run_external_command(const std::string& command_template,
                         const std::map<std::string, std::string>& placeholders,
                         double timeout_s, const std::string& workdir);

}  // namespace nsedit

#endif
