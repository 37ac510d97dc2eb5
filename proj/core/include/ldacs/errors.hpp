#pragma once

#include <stdexcept>
#include <string>

namespace ldacs {

/// Bad bit-vector widths, malformed hex, truncated frames.
class EncodingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Precondition violation on an operation argument.
class ArgumentError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Malformed dataset, model, database or config file.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace ldacs
