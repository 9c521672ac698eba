#pragma once

#include <stdexcept>
#include <string>

namespace curator {

enum class ErrorKind {
  Io,         // unreadable/unwritable files
  Format,     // malformed file contents
  Reference,  // dangling ids between files
  Lookup,     // missing entry in a loaded table
  Parameter,  // invalid argument to an operation
  Domain,     // input outside an operation's mathematical domain
  Training,   // degenerate or empty training input
  Numerical,  // solver breakdown, non-convergence
  Config,     // invalid pipeline configuration
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, std::string message)
      : std::runtime_error(std::move(message)), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& message) {
  throw Error(kind, message);
}

}  // namespace curator
