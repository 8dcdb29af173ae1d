#pragma once

#include <stdexcept>
#include <string>

namespace promkit {

// Base of every error the library throws. The CLI maps the concrete
// subclasses onto exit codes (I/O -> 2, everything else -> 1).
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// File missing, unreadable or unwritable.
class IoError : public Error {
 public:
  using Error::Error;
};

// Bytes on disk do not follow the expected container format.
class FormatError : public Error {
 public:
  using Error::Error;
};

// Well-formed container holding unusable values (NaN, out of range).
class DataError : public Error {
 public:
  using Error::Error;
};

// Semantically invalid records: manifests, vote files, configs.
class ValidationError : public Error {
 public:
  using Error::Error;
};

// Caller violated a precondition (dimension mismatch, empty region, ...).
class ContractError : public Error {
 public:
  using Error::Error;
};

}  // namespace promkit
