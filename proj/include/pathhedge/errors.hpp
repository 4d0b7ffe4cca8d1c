#pragma once

#include <stdexcept>
#include <string>

namespace pathhedge {

/// Bad or inconsistent input: dimension mismatch, level out of range,
/// non-positive-definite covariance, CFL violation and the like.
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A query fell outside the region a grid or table covers.
class DomainError : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

/// Nested-solve budget of the recursive scheme exceeded.
class BudgetError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace pathhedge
