#pragma once

#include <stdexcept>
#include <string>

namespace semtrans {

/// Base class for all errors raised by this library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A document or model is malformed: undeclared identifiers, duplicate
/// names, arity mismatches, values outside declared domains.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// An operation was invoked on inputs that do not satisfy its stated
/// preconditions (e.g. a non-contractive cyclic system, a variable with
/// children passed to a childless marginalization).
class PreconditionError : public Error {
 public:
  using Error::Error;
};

/// An iterative solver failed to converge within its iteration budget.
class SolverError : public Error {
 public:
  SolverError(const std::string& message, double last_residual)
      : Error(message), residual(last_residual) {}
  double residual;
};

/// A closed-form computation does not apply to the given model (the caller
/// is expected to fall back to sampling).
class NotApplicableError : public Error {
 public:
  using Error::Error;
};

/// Something that is guaranteed by construction failed anyway. Indicates a
/// bug in this library rather than in the caller's input.
class InternalConsistencyError : public Error {
 public:
  using Error::Error;
};

}  // namespace semtrans
