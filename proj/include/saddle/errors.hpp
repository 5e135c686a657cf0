#pragma once

#include <stdexcept>
#include <string>

namespace saddle {

/// Base class for all errors thrown by this library.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// A caller-supplied argument violates a precondition.
class ArgumentError : public Error {
 public:
  using Error::Error;
};

/// The target policy visits a state-action pair the behavior distribution
/// never samples.
class CoverageError : public Error {
 public:
  using Error::Error;
};

/// Input is degenerate beyond repair (e.g. all feature rows are zero).
class DegenerateInputError : public Error {
 public:
  using Error::Error;
};

/// Requested operation is outside the supported problem class.
class UnsupportedError : public Error {
 public:
  using Error::Error;
};

/// No policy satisfies the constraint thresholds.
class InfeasibleError : public Error {
 public:
  using Error::Error;
};

/// A non-finite value appeared during iteration.
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// An internal consistency check failed; indicates a bug, not bad input.
class InternalError : public Error {
 public:
  using Error::Error;
};

}  // namespace saddle
