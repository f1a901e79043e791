#pragma once

#include <stdexcept>
#include <string>

namespace catcollapse {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Precondition violated by a caller-supplied value.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// Malformed or incomplete scenario/config input.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Scenario is well-formed but physically inadmissible (e.g. detectors in causal contact).
class ScenarioRejected : public Error {
 public:
  using Error::Error;
};

/// A numerical budget (Hilbert dimension, iteration cap, root bracket) was exhausted.
class NumericalBudgetError : public Error {
 public:
  using Error::Error;
};

/// Operation applied to a value in the wrong lifecycle state (e.g. double collapse).
class StateError : public Error {
 public:
  using Error::Error;
};

}  // namespace catcollapse
