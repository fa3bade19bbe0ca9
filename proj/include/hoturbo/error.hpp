#pragma once

#include <stdexcept>
#include <string>

namespace hoturbo {

/// Base of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input file or record.
class ParseError : public Error {
 public:
  using Error::Error;
};

/// Input parsed but violates a documented invariant or precondition.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// Linear algebra failure (e.g. covariance not positive definite after jitter).
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// The evaluation budget cannot cover the requested work.
class BudgetError : public Error {
 public:
  using Error::Error;
};

}  // namespace hoturbo
