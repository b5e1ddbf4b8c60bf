#pragma once

#include <stdexcept>
#include <string>

namespace calheat {

/// Base error for the library. Carries the name of the module that raised it
/// so the CLI and the C API can report provenance.
class Error : public std::runtime_error {
 public:
  Error(std::string module, const std::string& what)
      : std::runtime_error(module + ": " + what), module_(std::move(module)) {}

  const std::string& module() const noexcept { return module_; }

 private:
  std::string module_;
};

/// Invalid input (bad sizes, undefined kernel arguments, malformed files).
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// Numerical failure inside a solver (singular step system, Newton failure).
class SolverError : public Error {
 public:
  using Error::Error;
};

}  // namespace calheat
