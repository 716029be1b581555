#ifndef NSEDIT_ERRORS_HPP
#define NSEDIT_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace nsedit {

// Error kinds mirror the failure modes of the individual stages so the CLI
// can attribute a failure without string matching.
enum class Errc {
  file_not_found,
  unsupported_format,
  corrupt_header,
  io_error,
  signal_too_short,
  invalid_hop,
  invalid_band_range,
  invalid_dimension,
  invalid_argument,
  singular_system,
  backend_failure,
  reference_mismatch,
  region_out_of_bounds,
  missing_replacement,
  fade_too_long,
  dimension_mismatch,
  geometry_mismatch,
  sample_rate_mismatch,
  length_mismatch,
  boundary_out_of_range,
  empty_training_set,
  config_error,
};

const char* errc_name(Errc c);

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code) {}

  Errc code() const { return code_; }

 private:
  Errc code_;
};

}  // namespace nsedit

#endif
