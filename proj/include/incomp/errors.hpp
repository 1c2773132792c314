#pragma once

#include <stdexcept>
#include <string>

namespace incomp {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed arguments: bad sizes, nonpositive spacings, invalid options.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// A position fell outside the grid it was meant to live on.
class OutOfDomainError : public Error {
 public:
  using Error::Error;
};

/// A sampled value left the domain of the function (e.g. log of a nonpositive number).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Two particles (or a particle and a positive point charge) coincide; the energy is +inf.
class SingularConfigurationError : public Error {
 public:
  using Error::Error;
};

/// An iterative method hit its iteration cap without meeting its tolerance.
class ConvergenceError : public Error {
 public:
  using Error::Error;
};

class FrameMismatchError : public Error {
 public:
  using Error::Error;
};

class InfeasibleError : public Error {
 public:
  using Error::Error;
};

}  // namespace incomp
