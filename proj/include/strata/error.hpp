#pragma once

#include <stdexcept>
#include <string>

namespace strata {

// Caller passed something that violates an operation's precondition.
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Input data could not be parsed or is numerically unusable.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A regression or curve diagnostic has too few usable rows.
class DegenerateFit : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace strata
