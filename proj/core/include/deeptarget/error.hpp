#pragma once

#include <stdexcept>
#include <string>

namespace deeptarget {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed or inconsistent input data (files, sequences, datasets).
class DataError : public Error {
 public:
  using Error::Error;
};

/// Shape or argument contract violated by the caller.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// Non-finite values or divergence during numeric work.
class NumericError : public Error {
 public:
  using Error::Error;
};

/// Checkpoint file could not be decoded or does not match expectations.
class FormatError : public DataError {
 public:
  using DataError::DataError;
};

}  // namespace deeptarget
