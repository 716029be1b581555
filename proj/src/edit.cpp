#include "nsedit/edit.hpp"

#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <thread>
#include <vector>

#include "nsedit/errors.hpp"

namespace nsedit {

EditOp edit_op_from_string(const std::string& s) {
  if (s == "insertion") return EditOp::insertion;
  if (s == "replacement") return EditOp::replacement;
  if (s == "deletion") return EditOp::deletion;
  throw Error(Errc::invalid_argument, "unknown edit operation: " + s);
}

const char* edit_op_name(EditOp op) {
  switch (op) {
    case EditOp::insertion: return "insertion";
    case EditOp::replacement: return "replacement";
    case EditOp::deletion: return "deletion";
  }
  return "?";
}

namespace {

std::size_t fade_samples(double fade_ms, int sample_rate) {
  if (fade_ms < 0.0) throw Error(Errc::invalid_argument, "fade_ms must be >= 0");
  return static_cast<std::size_t>(std::llround(fade_ms * 1e-3 * sample_rate));
}

// complementary raised-cosine gains; out + in == 1 exactly
double fade_out_gain(std::size_t i, std::size_t fade) {
  const double t = (static_cast<double>(i) + 1.0) / (static_cast<double>(fade) + 1.0);
  return 0.5 * (1.0 + std::cos(M_PI * t));
}

void check_rates(const Waveform& a, const Waveform& b, const char* where) {
  if (!a.samples.empty() && !b.samples.empty() && a.sample_rate != b.sample_rate) {
    throw Error(Errc::sample_rate_mismatch, where);
  }
}

// overlap-mix the last `fade` samples of `out` with the first `fade` samples
// of `next`, then append the rest of `next`
void crossfade_append(std::vector<double>& out, const std::vector<double>& next,
                      std::size_t fade) {
  const std::size_t base = out.size() - fade;
  for (std::size_t i = 0; i < fade; ++i) {
    const double g_out = fade_out_gain(i, fade);
    out[base + i] = g_out * out[base + i] + (1.0 - g_out) * next[i];
  }
  out.insert(out.end(), next.begin() + static_cast<std::ptrdiff_t>(fade), next.end());
}

}  // namespace

Waveform crossfade_splice(const Waveform& head, const Waveform& insert, const Waveform& tail,
                          double fade_ms) {
  check_rates(head, insert, "crossfade_splice");
  check_rates(head, tail, "crossfade_splice");
  check_rates(insert, tail, "crossfade_splice");
  int rate = head.sample_rate;
  if (head.samples.empty() && !insert.samples.empty()) rate = insert.sample_rate;
  if (head.samples.empty() && insert.samples.empty()) rate = tail.sample_rate;

  const std::size_t fade = fade_samples(fade_ms, rate);
  const bool no_insert = insert.samples.empty();
  if (fade > 0) {
    if (fade > head.size() || fade > tail.size() || (!no_insert && fade > insert.size())) {
      throw Error(Errc::fade_too_long, "crossfade_splice: fade exceeds an adjoining segment");
    }
  }

  std::vector<double> out = head.samples;
  if (no_insert) {
    crossfade_append(out, tail.samples, fade);
  } else {
    crossfade_append(out, insert.samples, fade);
    crossfade_append(out, tail.samples, fade);
  }
  return Waveform(std::move(out), rate);
}

namespace {

Waveform slice(const Waveform& w, std::size_t begin, std::size_t end) {
  Waveform out;
  out.sample_rate = w.sample_rate;
  out.samples.assign(w.samples.begin() + static_cast<std::ptrdiff_t>(begin),
                     w.samples.begin() + static_cast<std::ptrdiff_t>(end));
  return out;
}

Waveform splice_edit(const Waveform& x, const EditScript& script, double crossfade_ms) {
  const std::size_t len = x.samples.size();
  const std::size_t m = script.region_start;
  const std::size_t fade = fade_samples(crossfade_ms, x.sample_rate);

  switch (script.operation) {
    case EditOp::replacement: {
      if (m + script.region_len > len) {
        throw Error(Errc::region_out_of_bounds, "apply_edit: replacement region exceeds input");
      }
      if (!script.replacement_audio || script.replacement_audio->samples.empty()) {
        throw Error(Errc::missing_replacement, "apply_edit: replacement needs audio");
      }
      return crossfade_splice(slice(x, 0, m), *script.replacement_audio,
                              slice(x, m + script.region_len, len),
                              crossfade_ms);
    }
    case EditOp::insertion: {
      if (m > len) {
        throw Error(Errc::region_out_of_bounds, "apply_edit: insertion point exceeds input");
      }
      if (!script.replacement_audio || script.replacement_audio->samples.empty()) {
        throw Error(Errc::missing_replacement, "apply_edit: insertion needs audio");
      }
      check_rates(x, *script.replacement_audio, "apply_edit");
      Waveform insert = *script.replacement_audio;
      const std::size_t f = std::min(fade, insert.size() / 2);
      for (std::size_t i = 0; i < f; ++i) {
        const double g = 1.0 - fade_out_gain(i, f);  // ramp up
        insert.samples[i] *= g;
        insert.samples[insert.size() - 1 - i] *= g;
      }
      std::vector<double> out;
      out.reserve(len + insert.size());
      out.insert(out.end(), x.samples.begin(), x.samples.begin() + static_cast<std::ptrdiff_t>(m));
      out.insert(out.end(), insert.samples.begin(), insert.samples.end());
      out.insert(out.end(), x.samples.begin() + static_cast<std::ptrdiff_t>(m), x.samples.end());
      return Waveform(std::move(out), x.sample_rate);
    }
    case EditOp::deletion: {
      if (script.region_len == 0) return x;
      if (m + script.region_len > len) {
        throw Error(Errc::region_out_of_bounds, "apply_edit: deletion region exceeds input");
      }
      std::vector<double> out;
      out.reserve(len - script.region_len);
      out.insert(out.end(), x.samples.begin(), x.samples.begin() + static_cast<std::ptrdiff_t>(m));
      out.insert(out.end(), x.samples.begin() + static_cast<std::ptrdiff_t>(m + script.region_len),
                 x.samples.end());
      // boundary fade-out / fade-in over the kept material
      const std::size_t f = std::min({fade, m, out.size() - m});
      for (std::size_t i = 0; i < f; ++i) {
        out[m - f + i] *= fade_out_gain(i, f);                 // tail of the head
        out[m + i] *= 1.0 - fade_out_gain(i, f);               // head of the tail
      }
      return Waveform(std::move(out), x.sample_rate);
    }
  }
  throw Error(Errc::invalid_argument, "apply_edit: unknown operation");
}

std::string substitute(const std::string& tmpl, const std::map<std::string, std::string>& vars) {
  std::string out = tmpl;
  for (const auto& [key, value] : vars) {
    const std::string token = "{" + key + "}";
    std::size_t pos = 0;
    while ((pos = out.find(token, pos)) != std::string::npos) {
      out.replace(pos, token.size(), value);
      pos += value.size();
    }
  }
  return out;
}

}  // namespace

int run_external_command(const std::string& command_template,
                         const std::map<std::string, std::string>& placeholders,
                         double timeout_s, const std::string& workdir) {
  const std::string command = substitute(command_template, placeholders);

  pid_t pid = fork();
  if (pid < 0) {
    throw Error(Errc::backend_failure, "fork failed for external backend");
  }
  if (pid == 0) {
    if (!workdir.empty() && chdir(workdir.c_str()) != 0) _exit(127);
    execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char*>(nullptr));
    _exit(127);
  }

  const auto deadline = std::chrono::steady_clock::now() +
                        std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                            std::chrono::duration<double>(timeout_s));
  int status = 0;
  for (;;) {
    const pid_t r = waitpid(pid, &status, WNOHANG);
    if (r == pid) break;
    if (r < 0) throw Error(Errc::backend_failure, "waitpid failed for external backend");
    if (std::chrono::steady_clock::now() >= deadline) {
      kill(pid, SIGKILL);
      waitpid(pid, &status, 0);
      throw Error(Errc::backend_failure, "external backend timed out: " + command);
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(10));
  }
  if (WIFEXITED(status)) return WEXITSTATUS(status);
  return -1;
}

namespace {

Waveform external_edit(const Waveform& x, const EditScript& script, const EditorSpec& spec) {
  namespace fs = std::filesystem;
  if ((script.operation != EditOp::deletion) && script.target_transcript.empty()) {
    throw Error(Errc::missing_replacement,
                "apply_edit: external backend needs a target transcript");
  }
  static std::atomic<unsigned> counter{0};
  const fs::path dir = fs::temp_directory_path() /
                       ("nsedit_edit_" + std::to_string(::getpid()) + "_" +
                        std::to_string(counter.fetch_add(1)));
  fs::create_directories(dir);
  const fs::path in_path = dir / "input.wav";
  const fs::path out_path = dir / "output.wav";
  write_wav(x, in_path.string(), WavEncoding::float32);

  const std::map<std::string, std::string> vars = {
      {"input", fs::absolute(in_path).string()},
      {"output", fs::absolute(out_path).string()},
      {"region_start", std::to_string(script.region_start)},
      {"region_len", std::to_string(script.region_len)},
      {"orig_transcript", script.orig_transcript},
      {"target_transcript", script.target_transcript},
  };
  const int code = run_external_command(spec.command, vars, spec.timeout_s, spec.workdir);
  if (code != 0) {
    throw Error(Errc::backend_failure,
                "external editor exited with code " + std::to_string(code));
  }
  if (!fs::exists(out_path)) {
    throw Error(Errc::backend_failure, "external editor produced no output file");
  }
  Waveform out = read_wav(out_path.string());
  fs::remove_all(dir);
  return out;
}

}  // namespace

Waveform apply_edit(const Waveform& x, const EditScript& script, const EditorSpec& spec) {
  validate(x, "apply_edit");
  switch (spec.kind) {
    case EditorKind::splice:
      return splice_edit(x, script, spec.crossfade_ms);
    case EditorKind::external:
      return external_edit(x, script, spec);
  }
  throw Error(Errc::invalid_argument, "apply_edit: unknown editor kind");
}

}  // namespace nsedit
