#pragma once

#include <stdexcept>
#include <string>

namespace dbobs {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed arguments: shape mismatch, non-finite entries, bad ranges.
class InvalidInput : public Error {
 public:
  using Error::Error;
};

/// The pair (C, A) is not observable (or numerically indistinguishable from one that is not).
class NotObservable : public Error {
 public:
  using Error::Error;
};

/// A set intersection that should be a single point was empty or a continuum.
class Degenerate : public Error {
 public:
  using Error::Error;
};

/// A state or input left the declared domain of a nonlinear system.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// An iterative numerical routine (eigenvalue solver) failed to converge.
class NumericError : public Error {
 public:
  using Error::Error;
};

}  // namespace dbobs
