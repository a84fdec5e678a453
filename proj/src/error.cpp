#include "lfpp/error.hpp"

namespace lfpp {

std::string_view to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::domain: return "domain";
    case ErrorKind::usage: return "usage";
    case ErrorKind::resource_limit: return "resource-limit";
    case ErrorKind::invalid_resolution: return "invalid-resolution";
    case ErrorKind::incompatible_samples: return "incompatible-samples";
    case ErrorKind::malformed_path: return "malformed-path";
    case ErrorKind::disconnected: return "disconnected";
    case ErrorKind::invalid_query: return "invalid-query";
    case ErrorKind::oracle_size_limit: return "oracle-size-limit";
    case ErrorKind::parameter_order: return "parameter-order";
    case ErrorKind::underdetermined_fit: return "underdetermined-fit";
    case ErrorKind::grid_spacing: return "grid-spacing";
    case ErrorKind::excluded_point: return "excluded-point";
    case ErrorKind::incompatible_estimates: return "incompatible-estimates";
    case ErrorKind::inconsistent_lambda: return "inconsistent-lambda";
    case ErrorKind::outside_subcritical: return "outside-subcritical";
    case ErrorKind::bracket_failure: return "bracket-failure";
    case ErrorKind::io: return "io";
    case ErrorKind::checksum_mismatch: return "checksum-mismatch";
  }
  return "unknown";
}

Error::Error(ErrorKind kind, const std::string& message)
    : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind), message_(message) {}

void fail(ErrorKind kind, const std::string& message) { throw Error(kind, message); }

}  // namespace lfpp
