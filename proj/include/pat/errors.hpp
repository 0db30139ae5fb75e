#pragma once

#include <stdexcept>
#include <string>

namespace pat {

// Error taxonomy shared by the library and the CLI exit-code mapping.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Bad argument values, out-of-range parameters, shape mismatches.
struct ArgumentError : Error {
  using Error::Error;
};

// Unsupported or malformed file contents (magic, encoding, field values).
struct FormatError : Error {
  using Error::Error;
};

// A file that parsed far enough to identify itself but is truncated or
// internally inconsistent.
struct CorruptFileError : FormatError {
  using FormatError::FormatError;
};

// Filesystem-level failures (unreadable/unwritable paths, short writes).
struct IoError : Error {
  using Error::Error;
};

// Target transcription that no label path of the given length can produce.
struct InfeasibleTargetError : ArgumentError {
  using ArgumentError::ArgumentError;
};

// Non-finite value where a finite one is required to continue.
struct NumericError : Error {
  using Error::Error;
};

}  // namespace pat
