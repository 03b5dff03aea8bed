#pragma once

#include <stdexcept>
#include <string>

namespace safempc {

// Broad failure classes; the CLI maps each to its own exit code.
enum class ErrorKind {
  validation,        // malformed network / scenario / expression
  assumption,        // flow-bound assumption violated, monotone bounds unsound
  reach_explosion,   // too many demand branches
  empty_winning_set, // safety game returned nothing
  infeasible,        // no admissible control sequence
  unrecoverable,     // infeasible start and outside the attractor
  io,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace safempc
