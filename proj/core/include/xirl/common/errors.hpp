#pragma once

#include <stdexcept>
#include <string>

namespace xirl {

/// Root of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Tensor or grid shapes disagree with what an operation expects.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// A documented precondition was violated by the caller.
class ContractError : public Error {
 public:
  using Error::Error;
};

/// NaN/Inf encountered, or an optimisation diverged.
class NumericError : public Error {
 public:
  using Error::Error;
};

/// A file on disk is malformed (bad magic, truncated, checksum mismatch).
class FormatError : public Error {
 public:
  using Error::Error;
};

/// Files on disk disagree with each other (manifest vs. directory contents).
class ConsistencyError : public Error {
 public:
  using Error::Error;
};

/// Invalid or incomplete user configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace xirl
