#pragma once

#include <stdexcept>
#include <string>

namespace qsol {

enum class ErrorCode {
  config,                   // invalid configuration or input shape
  dimension_mismatch,       // inconsistent state dimensions
  unsupported_omega,        // localized branches require omega > 2
  no_convergence,           // Newton iteration failed
  wrong_branch,             // converged profile does not match the requested kind
  edge_leak,                // array too small for the requested profile
  zero_scale,               // operation undefined at L = 0 without rescaled state
  degenerate_denominator,   // validity ratio undefined for an all-zero field
  truncation_overflow,      // Fock cutoff too small for the requested state
  numerical_blowup,         // integration left the trusted numerical range
  io_failure,               // could not write an output artifact
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

// Process exit status for a failure category: 2 config, 3 solver, 4 blowup.
inline int exit_status(ErrorCode code) {
  switch (code) {
    case ErrorCode::config:
    case ErrorCode::dimension_mismatch:
    case ErrorCode::io_failure:
      return 2;
    case ErrorCode::numerical_blowup:
      return 4;
    default:
      return 3;
  }
}

}  // namespace qsol
