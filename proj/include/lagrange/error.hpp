#pragma once

#include <stdexcept>
#include <string>

namespace lagrange {

/// Malformed input: wrong dimensions, out-of-domain parameters, bad roots.
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Singular systems, non-convergent iterations, overflow.
class NumericFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A requested parameterization does not exist for the given roots.
class Infeasible : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Text input (CSV, JSON config) could not be parsed.
class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace lagrange
