#pragma once

#include <stdexcept>
#include <string>

namespace tvbd {

/// Base class for all errors raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Incompatible image / kernel sizes.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// Argument outside the mathematical domain of an operation (p < 1, negative lambda, ...).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// An iterative solver hit its iteration cap without meeting its tolerance.
class ConvergenceError : public Error {
 public:
  using Error::Error;
};

/// Clamp-and-normalize projection of a kernel with no positive mass.
class DegenerateKernelError : public Error {
 public:
  using Error::Error;
};

/// The blind deconvolution energy became NaN or infinite.
class DivergenceError : public Error {
 public:
  using Error::Error;
};

/// Malformed input file or stream.
class FormatError : public Error {
 public:
  using Error::Error;
};

}  // namespace tvbd
