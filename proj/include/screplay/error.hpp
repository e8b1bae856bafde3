#pragma once

#include <stdexcept>
#include <string>

namespace screplay {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Operand shapes do not agree. The message names the offending node.
class ShapeError : public Error {
public:
  using Error::Error;
};

/// A non-finite value was produced inside the graph.
class NumericError : public Error {
public:
  using Error::Error;
};

/// An operation was invoked in the wrong lifecycle state.
class StateError : public Error {
public:
  using Error::Error;
};

/// A documented precondition of an operation was violated.
class ContractError : public Error {
public:
  using Error::Error;
};

/// Input that cannot be normalized (row norm below epsilon).
class DegenerateInputError : public Error {
public:
  using Error::Error;
};

/// Invalid or inconsistent configuration.
class ConfigError : public Error {
public:
  using Error::Error;
};

class EmptyBatchError : public ContractError {
public:
  using ContractError::ContractError;
};

class NoClassesError : public Error {
public:
  using Error::Error;
};

class NoPrototypesError : public Error {
public:
  using Error::Error;
};

/// Prototypes were computed with a different model step than the one queried.
class StalenessError : public Error {
public:
  using Error::Error;
};

/// Malformed binary or text file.
class FormatError : public Error {
public:
  using Error::Error;
};

} // namespace screplay
