#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace lfpp {

/// Failure categories surfaced by the library. Each maps to one of the
/// signals a caller can branch on (e.g. the CLI maps `usage` to exit 2).
enum class ErrorKind {
  domain,
  usage,
  resource_limit,
  invalid_resolution,
  incompatible_samples,
  malformed_path,
  disconnected,
  invalid_query,
  oracle_size_limit,
  parameter_order,
  underdetermined_fit,
  grid_spacing,
  excluded_point,
  incompatible_estimates,
  inconsistent_lambda,
  outside_subcritical,
  bracket_failure,
  io,
  checksum_mismatch,
};

std::string_view to_string(ErrorKind kind) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message);

  ErrorKind kind() const noexcept { return kind_; }
  /// The text without the kind prefix.
  const std::string& message() const noexcept { return message_; }

 private:
  ErrorKind kind_;
  std::string message_;
};

[[noreturn]] void fail(ErrorKind kind, const std::string& message);

inline void require(bool condition, ErrorKind kind, const std::string& message) {
  if (!condition) fail(kind, message);
}

}  // namespace lfpp
