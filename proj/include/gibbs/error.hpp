// Copyright 2026 The gibbs-dnls Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace gibbs {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A documented precondition of an operation was violated.
class PreconditionError : public Error {
 public:
  using Error::Error;
};

/// A numerical computation left the representable range or produced NaN.
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// Too little data for a statistic to be meaningful (empty tail, zero weights,
/// small effective sample size).
class InsufficientDataError : public Error {
 public:
  using Error::Error;
};

}  // namespace gibbs
