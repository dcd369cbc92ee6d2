#pragma once

#include <stdexcept>
#include <string>

namespace spinsim {

/// Base class of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Operands with incompatible dimensions.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// A parameter outside its physical or mathematical domain.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// A numerical result that violates a contract (unitarity, Hermiticity, ...).
class NumericalError : public Error {
 public:
  using Error::Error;
};

}  // namespace spinsim
