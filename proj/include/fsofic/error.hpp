#pragma once

#include <stdexcept>
#include <string>

namespace fsofic {

// Exit codes used by the command-line harness.
enum class ExitCode : int {
  kSuccess = 0,
  kVerificationFailure = 1,
  kInputError = 2,
  kResourceCap = 3,
};

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
  virtual ExitCode exit_code() const noexcept = 0;
};

/// Malformed or inconsistent input (bad letters, invalid weights, mismatched windows).
class InputError : public Error {
 public:
  using Error::Error;
  ExitCode exit_code() const noexcept override { return ExitCode::kInputError; }
};

/// A configured enumeration/size cap would be exceeded.
class ResourceError : public Error {
 public:
  using Error::Error;
  ExitCode exit_code() const noexcept override { return ExitCode::kResourceCap; }
};

/// An evaluation needed a group element outside the finite window an object is defined on.
class WindowError : public InputError {
 public:
  using InputError::InputError;
};

/// A checked identity or axiom failed; the message carries the certificate.
class VerificationError : public Error {
 public:
  using Error::Error;
  ExitCode exit_code() const noexcept override { return ExitCode::kVerificationFailure; }
};

}  // namespace fsofic
