#pragma once

#include <stdexcept>
#include <string>

namespace lgobs {

/// Bad user input: malformed configuration, out-of-domain arguments.
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Non-finite values or failed numerical procedures.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// File-system and format errors. The message carries the offending path.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace lgobs
