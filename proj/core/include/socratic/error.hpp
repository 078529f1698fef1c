#pragma once

#include <stdexcept>
#include <string>

namespace socratic {

/// Base for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A caller violated an operation's precondition (empty input, bad range).
class PreconditionError : public Error {
 public:
  using Error::Error;
};

/// Malformed or inconsistent data: bank files, run records, score tables.
class DataError : public Error {
 public:
  using Error::Error;
};

/// Failure talking to a model backend. `kind` separates the cases callers
/// treat differently (retryable transport problems vs. a bad response).
class BackendError : public Error {
 public:
  enum class Kind { kNetwork, kHttpStatus, kEmptyCompletion, kBadResponse };

  BackendError(Kind kind, const std::string& what, int attempts = 1, int status = 0)
      : Error(what), kind_(kind), attempts_(attempts), status_(status) {}

  Kind kind() const noexcept { return kind_; }
  int attempts() const noexcept { return attempts_; }
  /// HTTP status for kHttpStatus, 0 otherwise.
  int status() const noexcept { return status_; }

 private:
  Kind kind_;
  int attempts_;
  int status_;
};

}  // namespace socratic
