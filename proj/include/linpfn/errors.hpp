// Copyright 2026 The linpfn Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace linpfn {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Operand shapes do not agree.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// A documented precondition was violated by the caller.
class ContractError : public Error {
 public:
  using Error::Error;
};

/// An object was used in the wrong lifecycle state (e.g. backward before a forward pass).
class StateError : public Error {
 public:
  using Error::Error;
};

/// Input exceeds a model's declared feature, class, or prompt capacity.
class CapacityError : public Error {
 public:
  using Error::Error;
};

/// Malformed or inconsistent file contents. `field()` names the offending part.
class FormatError : public Error {
 public:
  FormatError(std::string field, const std::string& what)
      : Error("format error in '" + field + "': " + what), field_(std::move(field)) {}

  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

/// Training produced a non-finite loss.
class TrainingError : public Error {
 public:
  using Error::Error;
};

/// Bad command-line usage (exit code 2 in the CLI).
class UsageError : public Error {
 public:
  using Error::Error;
};

}  // namespace linpfn
