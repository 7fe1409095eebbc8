#pragma once

#include <stdexcept>
#include <string>

namespace iontrap {

/// Failure categories. Each maps onto one CLI exit code.
enum class ErrorKind {
  config,              // invalid or missing configuration
  io,                  // unreadable/unwritable files, malformed formats
  data_quality,        // input data cannot support an estimate
  degenerate_design,   // regression design matrix carries no information
  infinite_temperature,  // sideband ratio R >= 1
  fit_convergence,     // iterative fit or integrator did not converge
};

const char* to_string(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, std::string module, const std::string& what)
      : std::runtime_error(module + ": " + what), kind_(kind), module_(std::move(module)) {}

  ErrorKind kind() const { return kind_; }
  const std::string& module() const { return module_; }

 private:
  ErrorKind kind_;
  std::string module_;
};

/// 0 success, 2 config, 3 data quality, 4 fit non-convergence, 5 acceptance failure.
int exit_code(ErrorKind kind);
inline constexpr int kExitAcceptanceFailure = 5;

}  // namespace iontrap
