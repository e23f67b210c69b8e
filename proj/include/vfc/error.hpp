#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace vfc {

/// Failure categories surfaced by the library. The CLI maps them onto exit codes.
enum class ErrorKind {
  input,         ///< argument outside its documented domain
  range,         ///< value outside the range of a monotone map
  divergence,    ///< integral diverges at the requested point
  structural,    ///< coefficient set lacks required structure (e.g. no factorization)
  overflow,      ///< bracket could not be formed before overflow
  blowup,        ///< NaN/Inf produced by the solver
  stiffness,     ///< time step underflow
  bound,         ///< invariant region violated beyond tolerance
  condition_c,   ///< crossing/ordering condition on f_lambda failed
  construction,  ///< stationary profile could not be assembled
  precondition,  ///< operation-specific precondition failed
  inapplicable,  ///< hypothesis of a sufficient-condition constructor fails
  numerical,     ///< quadrature or iteration did not converge
  config,        ///< configuration parse or validation error
};

inline std::string_view to_string(ErrorKind k) {
  switch (k) {
    case ErrorKind::input: return "input";
    case ErrorKind::range: return "range";
    case ErrorKind::divergence: return "divergence";
    case ErrorKind::structural: return "structural";
    case ErrorKind::overflow: return "overflow";
    case ErrorKind::blowup: return "blowup";
    case ErrorKind::stiffness: return "stiffness";
    case ErrorKind::bound: return "bound";
    case ErrorKind::condition_c: return "condition-C";
    case ErrorKind::construction: return "construction";
    case ErrorKind::precondition: return "precondition";
    case ErrorKind::inapplicable: return "inapplicable";
    case ErrorKind::numerical: return "numerical";
    case ErrorKind::config: return "config";
  }
  return "unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + " error: " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

inline void require(bool ok, ErrorKind kind, const std::string& what) {
  if (!ok) fail(kind, what);
}

}  // namespace vfc
