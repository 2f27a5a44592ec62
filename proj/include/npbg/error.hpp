// Copyright 2026 The npbg Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace npbg {

// Base of every error thrown by the library. The CLI maps subclasses onto
// process exit codes (see tools/npbg.cpp).
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Missing files, unreadable or malformed input.
class IoError : public Error {
 public:
  using Error::Error;
};

// A file was readable but its content violates the format.
class ParseError : public IoError {
 public:
  using IoError::IoError;
};

// Binary container with bad magic, version or inconsistent lengths.
class FormatError : public IoError {
 public:
  using IoError::IoError;
};

// Domain invariant violated (e.g. non-orthonormal rotation).
class ValidationError : public Error {
 public:
  using Error::Error;
};

// Inconsistent configuration (unsupported basis order, channel count...).
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Caller broke a documented precondition.
class PreconditionError : public Error {
 public:
  using Error::Error;
};

// Linear solve or other numerical failure.
class NumericalError : public Error {
 public:
  using Error::Error;
};

// Camera optical axis is parallel to the world up axis; no canonical roll.
class DegenerateOrientationError : public Error {
 public:
  using Error::Error;
};

// Writes a warning line to stderr. Thread-safe.
void log_warning(const std::string& message);

}  // namespace npbg
