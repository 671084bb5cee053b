// Copyright (C) 2026 mirrorflow contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace mf {

// Base class for all library errors.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Vector/matrix size does not match the declared dimension.
class DimensionError : public Error {
 public:
  using Error::Error;
};

// A point violates strict feasibility; `constraint` is the index of the first
// violated barrier, or -1 when not attributable to a single row.
class FeasibilityError : public Error {
 public:
  FeasibilityError(const std::string& what, int constraint)
      : Error(what), constraint_(constraint) {}
  int constraint() const { return constraint_; }

 private:
  int constraint_ = -1;
};

// Non-finite values, solver non-convergence, etc.
class NumericError : public Error {
 public:
  using Error::Error;
};

// Degenerate statistical fit (e.g. too few tail points).
class StatsError : public Error {
 public:
  using Error::Error;
};

// Rejection sampler starved below its acceptance-rate floor.
class SamplingError : public Error {
 public:
  using Error::Error;
};

// Malformed checkpoint or sample file.
class FormatError : public Error {
 public:
  using Error::Error;
};

// Invalid experiment configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Violated call precondition (empty batch, k out of range, ...).
class PreconditionError : public Error {
 public:
  using Error::Error;
};

}  // namespace mf
