#pragma once

#include <stdexcept>
#include <string>

namespace stocheq {

/// Inconsistent matrix/vector shapes between the operands of an operation.
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A documented precondition of an operation does not hold (e.g. a relation
/// that is not total, an unstable system where stability is required).
class PreconditionError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// An underlying numerical routine failed (e.g. eigensolver did not converge).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace stocheq
