#pragma once

#include <stdexcept>
#include <string>

namespace msabs {

/// Broad failure classes; the CLI maps each one to an exit code.
enum class ErrorKind {
  kConfig,        // malformed or inconsistent input
  kInfeasible,    // no admissible space-time discretization
  kValidation,    // a simulated check falsified a claimed property
  kPrecondition,  // API misuse (bad dimensions, out-of-cover points, ...)
  kIo,            // file access or archive integrity
  kInternal,      // an invariant the construction guarantees did not hold
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) {
  throw Error(kind, what);
}

}  // namespace msabs
