#pragma once

#include <stdexcept>

namespace sublin {

// Invalid run configuration or violated operation precondition (band ordering,
// CFL bound, malformed grids, failed domination check, ...). The CLI maps this
// to exit code 2. Messages name the violated precondition.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A computation degenerated numerically (NaN during a PDE march, state grid
// overflow, ...). The CLI maps this to exit code 3.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace sublin
