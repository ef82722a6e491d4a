#pragma once

#include <stdexcept>
#include <string>

namespace tempcov {

// Error taxonomy shared by the core and the C API layer.  Every failure mode
// maps onto one of these types so callers can branch on the class rather than
// parse messages.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad argument values: negative sizes, unknown enum strings, out-of-range
// indices, invalid hyperparameters.
class InvalidArgumentError : public Error {
 public:
  using Error::Error;
};

// Shape disagreements between operands (matrix sizes, period counts).
class DimensionError : public Error {
 public:
  using Error::Error;
};

// A matrix that must be positive definite is not.
class NotPositiveDefiniteError : public Error {
 public:
  using Error::Error;
};

// A variable with zero variance where standardization is required.
class ZeroVarianceError : public Error {
 public:
  using Error::Error;
};

// Non-finite values produced or consumed by numerical routines.
class NumericalError : public Error {
 public:
  using Error::Error;
};

// Filesystem-level failures: missing files, unwritable paths.
class IoError : public Error {
 public:
  using Error::Error;
};

// Structurally broken serialized artifacts (truncation, bad magic, missing
// fields, inconsistent shapes).
class CorruptFileError : public Error {
 public:
  using Error::Error;
};

// Well-formed artifact written by a newer format revision.
class UnsupportedVersionError : public Error {
 public:
  using Error::Error;
};

}  // namespace tempcov
