#pragma once

#include <stdexcept>
#include <string>

namespace magshift {

/// Input rejected by a validator (bad config file, overlapping discs, ...).
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Argument outside the mathematical domain of an operation.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Numerical failure: step size floor, energy drift, bracket collapse.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A corridor or line construction has no (or a degenerate) solution.
class GeometryError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace magshift
