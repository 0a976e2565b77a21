#pragma once

#include <stdexcept>
#include <string>

namespace dslm {

// A violated precondition or malformed input. The CLI maps it to exit code 1.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Wrong flags or missing task conditions at the command-line boundary (exit 2).
class UsageError : public Error {
 public:
  using Error::Error;
};

}  // namespace dslm
