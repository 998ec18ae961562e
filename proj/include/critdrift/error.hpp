#pragma once

#include <stdexcept>
#include <string>

namespace critdrift {

/// Precondition violation on caller-supplied data (bad parameter, non-finite
/// field, mismatched grids, infeasible request).
class InvalidInput : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Numerical failure detected while computing (overflow, NaN mid-run).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace critdrift
