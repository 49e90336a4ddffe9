#pragma once

#include <stdexcept>
#include <string>

namespace cmcm {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A caller-supplied parameter or configuration is out of range.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// Operand shapes do not agree.
class DimensionMismatch : public InvalidArgument {
 public:
  using InvalidArgument::InvalidArgument;
};

/// A numerical procedure could not complete (e.g. a failed factorization).
class NumericError : public Error {
 public:
  using Error::Error;
};

enum class DataErrorKind {
  kMissingFile,
  kParse,
  kRaggedRow,
  kDimensionMismatch,
  kNegativeValue,
  kLabelNotInTrain,
  kSchema,
  kIo,
};

/// Bad input data: unreadable files, malformed content, constraint violations.
class DataError : public Error {
 public:
  DataError(DataErrorKind kind, const std::string& what) : Error(what), kind_(kind) {}
  DataErrorKind kind() const noexcept { return kind_; }

 private:
  DataErrorKind kind_;
};

}  // namespace cmcm
