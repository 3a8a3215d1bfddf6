#pragma once

#include <stdexcept>
#include <string>

namespace intentrl {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Shape mismatch between operands.
class DimensionError : public Error {
 public:
  using Error::Error;
};

// Operation called in the wrong lifecycle state (e.g. backward before forward).
class StateError : public Error {
 public:
  using Error::Error;
};

// Non-finite values or a diverged loss.
class NumericError : public Error {
 public:
  using Error::Error;
};

class IndexError : public Error {
 public:
  using Error::Error;
};

// Values outside a function's mathematical domain.
class DomainError : public Error {
 public:
  using Error::Error;
};

// Zero base rate paired with nonzero probability mass.
class BaseRateError : public DomainError {
 public:
  using DomainError::DomainError;
};

// A caller broke an API contract, such as rolling out over an unfrozen classifier.
class ContractError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

// Malformed input data. Parse errors carry the offending line number.
class DataError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  IoError(const std::string& what, std::string path)
      : Error(what + ": " + path), path_(std::move(path)) {}
  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

}  // namespace intentrl
