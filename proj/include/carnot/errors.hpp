#pragma once

#include <stdexcept>
#include <string>

namespace carnot {

// Root of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed or non-finite input, dimension mismatch.
class InputError : public Error {
 public:
  using Error::Error;
};

// Evaluation at a point where the quantity is undefined (e.g. ∇H at 0).
class DomainError : public Error {
 public:
  using Error::Error;
};

// h = 0: the maximized Hamiltonian vanishes, which is the excluded abnormal case.
class AbnormalCovectorError : public DomainError {
 public:
  using DomainError::DomainError;
};

// Operation only defined for a particular number of generators.
class UnsupportedRankError : public Error {
 public:
  using Error::Error;
};

class NumericalFailure : public Error {
 public:
  NumericalFailure(const std::string& what, double time)
      : Error(what), time_(time) {}
  double time() const noexcept { return time_; }

 private:
  double time_;
};

// No first return was found before the configured horizon.
class HorizonExhausted : public NumericalFailure {
 public:
  using NumericalFailure::NumericalFailure;
};

}  // namespace carnot
