#pragma once

#include <stdexcept>
#include <string>

namespace progeny {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Input that cannot be parsed (malformed JSON, missing fields, wrong shapes).
class ParseError : public Error {
 public:
  using Error::Error;
};

/// A documented precondition was violated (boundary direction, wrong model kind,
/// oracle budget exceeded, ...).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Numerical abort: overflow, underflow guard, solver divergence.
class NumericError : public Error {
 public:
  using Error::Error;
};

}  // namespace progeny
