#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace perfpred {

enum class ErrorKind {
  parse,      // malformed record / unparseable model output
  integrity,  // duplicate ids, shape mismatches, invariant violations
  range,      // value outside its declared scale
  arity,      // length/count mismatch
  size,       // requested size unavailable
  schema,     // feature ids or record fields do not match expectations
  backend,    // transport / remote endpoint failure
  numeric,    // non-finite inputs or solver failure
  config,     // bad experiment configuration
  io,         // filesystem failure
  undefined,  // mathematically undefined result (e.g. constant-input Pearson)
};

const char* error_kind_name(ErrorKind k);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(std::string(error_kind_name(kind)) + ": " + message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

/// Raised when some samples of a multi-sample request succeeded and others did not.
class PartialFailureError : public Error {
 public:
  PartialFailureError(const std::string& message, std::vector<int> succeeded)
      : Error(ErrorKind::backend, message), succeeded_indices(std::move(succeeded)) {}

  std::vector<int> succeeded_indices;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& message) {
  throw Error(kind, message);
}

}  // namespace perfpred
