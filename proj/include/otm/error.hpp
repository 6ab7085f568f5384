#pragma once

#include <stdexcept>
#include <string>

namespace otm {

enum class ErrorCode {
  Argument,   // bad call-site input (caller bug)
  Config,     // configuration text or parameter rejected
  Io,         // file read/write failure
  Resolution, // under-resolved discretization: too few neighbors, spill over, Newton divergence
  Inversion,  // non-positive transport-map Jacobian at a material point
  Numerics,   // linear solver or iteration failure not tied to resolution
  Invariant,  // a state invariant audit failed
};

class Error : public std::runtime_error {
public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const { return code_; }

private:
  ErrorCode code_;
};

} // namespace otm
