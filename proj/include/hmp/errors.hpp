#pragma once

#include <stdexcept>
#include <string>

namespace hmp {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A documented precondition was violated (e.g. joint angles outside limits).
class PreconditionError : public Error {
 public:
  using Error::Error;
};

/// Malformed caller input (wrong vector length, occupied start cell, ...).
class InputError : public Error {
 public:
  using Error::Error;
};

/// A parameter combination that cannot be satisfied (e.g. waypoint bounds).
class ParameterError : public Error {
 public:
  using Error::Error;
};

/// The damped pseudo-inverse produced non-finite values.
class SingularityError : public Error {
 public:
  using Error::Error;
};

/// A database build whose sweep would exceed the configured budget.
class BudgetExceededError : public Error {
 public:
  BudgetExceededError(unsigned long long cardinality, unsigned long long budget);

  unsigned long long cardinality() const { return cardinality_; }

 private:
  unsigned long long cardinality_;
};

enum class LoadErrorKind {
  kIo,
  kBadMagic,
  kUnsupportedVersion,
  kTruncated,
  kChecksumMismatch,
  kMalformed,
};

const char* to_string(LoadErrorKind kind);

/// Failure while reading a database, model or scenario file.
class LoadError : public Error {
 public:
  LoadError(LoadErrorKind kind, const std::string& what);

  LoadErrorKind kind() const { return kind_; }

 private:
  LoadErrorKind kind_;
};

}  // namespace hmp
