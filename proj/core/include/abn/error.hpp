#pragma once

#include <stdexcept>
#include <string>

namespace abn {

/// Base exception for every failure raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed or inconsistent input files.
class ParseError : public Error {
 public:
  using Error::Error;
};

/// Preconditions on arguments or configuration.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// Numerical failure (divergence, failed factorization).
class NumericError : public Error {
 public:
  using Error::Error;
};

}  // namespace abn
