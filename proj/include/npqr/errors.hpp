#pragma once

#include <stdexcept>
#include <string>

namespace npqr {

// Base error for everything raised by this library.
struct error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Bad user input: config files, flags, malformed data files, missing columns.
struct config_error : error {
  using error::error;
};

// Numerical failure: rank deficiency, non-convergence, non-PD matrices,
// evaluation outside a basis domain.
struct numeric_error : error {
  using error::error;
};

}  // namespace npqr
