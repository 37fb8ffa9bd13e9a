#pragma once

#include <stdexcept>
#include <string>

namespace ntopo {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidProblem : public Error {
 public:
  using Error::Error;
};

class InvalidDensity : public Error {
 public:
  using Error::Error;
};

/// The linear solver did not reach its tolerance; usually a missing support.
class SingularSystem : public Error {
 public:
  using Error::Error;
};

class InvalidVolume : public Error {
 public:
  using Error::Error;
};

class ShapeMismatch : public Error {
 public:
  using Error::Error;
};

class BudgetExceeded : public Error {
 public:
  using Error::Error;
};

class UnknownDual : public Error {
 public:
  using Error::Error;
};

class DegenerateProfile : public Error {
 public:
  using Error::Error;
};

class SizeExceeded : public Error {
 public:
  using Error::Error;
};

class NegativeSpectrum : public Error {
 public:
  using Error::Error;
};

/// Training produced a NaN or infinite loss or gradient.
class NonFinite : public Error {
 public:
  using Error::Error;
};

}  // namespace ntopo
