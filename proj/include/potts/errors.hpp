#pragma once

#include <stdexcept>
#include <string>

namespace potts {

/// Argument outside the mathematical domain of an operation (negative
/// lambda, non-finite sample, non-positive variance, ...).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Indicator sequence violating the terminal convention r_N = 1.
class InvalidIndicatorError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Length mismatch between sequences that must agree.
class ShapeError : public std::length_error {
 public:
  using std::length_error::length_error;
};

class BoundsError : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

/// Every lambda on the grid produced a zero residual variance, so the
/// joint criterion is infinite everywhere.
class DegenerateSelectionError : public std::runtime_error {
 public:
  DegenerateSelectionError()
      : std::runtime_error("degenerate MAP: zero residual variance on all grid points") {}
};

/// No admissible candidate for an information-criterion selection.
class SelectionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class SamplerError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace potts
