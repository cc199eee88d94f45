#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace coroute {

enum class ErrorKind {
  invalid_argument,
  invalid_speed,
  disconnected_network,
  generation_failure,
  infeasible,
  contract_violation,
  size_limit,
  version_mismatch,
  io,
  non_finite,
};

std::string_view to_string(ErrorKind kind);

/// Every library failure is reported through this exception. The kind is
/// machine readable; the CLI maps it to an exit code and a stderr prefix.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& message) {
  throw Error(kind, message);
}

inline void require(bool condition, ErrorKind kind, const std::string& message) {
  if (!condition) fail(kind, message);
}

}  // namespace coroute
