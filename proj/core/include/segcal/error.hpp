#pragma once

#include <stdexcept>
#include <string>

namespace segcal {

// Raised for malformed or inconsistent user input (bad files, mismatched
// lengths, out-of-range ids). The CLI maps it to exit code 2.
class InvalidInput : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace segcal
