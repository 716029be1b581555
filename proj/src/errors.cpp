#include "nsedit/errors.hpp"

namespace nsedit {

const char* errc_name(Errc c) {
  switch (c) {
    case Errc::file_not_found: return "FileNotFound";
    case Errc::unsupported_format: return "UnsupportedFormat";
    case Errc::corrupt_header: return "CorruptHeader";
    case Errc::io_error: return "IoError";
    case Errc::signal_too_short: return "SignalTooShort";
    case Errc::invalid_hop: return "InvalidHop";
    case Errc::invalid_band_range: return "InvalidBandRange";
    case Errc::invalid_dimension: return "InvalidDimension";
    case Errc::invalid_argument: return "InvalidArgument";
    case Errc::singular_system: return "SingularSystem";
    case Errc::backend_failure: return "BackendFailure";
    case Errc::reference_mismatch: return "ReferenceMismatch";
    case Errc::region_out_of_bounds: return "RegionOutOfBounds";
    case Errc::missing_replacement: return "MissingReplacement";
    case Errc::fade_too_long: return "FadeTooLong";
    case Errc::dimension_mismatch: return "DimensionMismatch";
    case Errc::geometry_mismatch: return "GeometryMismatch";
    case Errc::sample_rate_mismatch: return "SampleRateMismatch";
    case Errc::length_mismatch: return "LengthMismatch";
    case Errc::boundary_out_of_range: return "BoundaryOutOfRange";
    case Errc::empty_training_set: return "EmptyTrainingSet";
    case Errc::config_error: return "ConfigError";
  }
  return "Error";
}

}  // namespace nsedit
