#pragma once

#include <stdexcept>
#include <string>

namespace dabea {

// Malformed or inconsistent input data (bad files, shape mismatches,
// out-of-range arguments). Maps to CLI exit code 2.
struct ValidationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Non-finite values or other numeric breakdowns. Maps to CLI exit code 3.
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace dabea
