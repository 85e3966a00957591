#pragma once

#include <stdexcept>
#include <string>

namespace dpdtw {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Shape mismatches, out-of-range ids and other contract violations.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

// Malformed or inconsistent input files. Messages carry the location.
class DataError : public Error {
 public:
  using Error::Error;
};

// Non-finite losses, infeasible generator constraints.
class NumericError : public Error {
 public:
  using Error::Error;
};

}  // namespace dpdtw
