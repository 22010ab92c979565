#pragma once

#include <stdexcept>
#include <string>

namespace denscov {

/// Base class for all library errors.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Bad configuration or violated call contract (maps to CLI exit code 2).
class ValidationError : public Error {
 public:
  explicit ValidationError(const std::string& msg) : Error(msg) {}
};

/// Numerical failure at runtime, e.g. an ill-conditioned solve (CLI exit code 3).
class NumericalError : public Error {
 public:
  explicit NumericalError(const std::string& msg) : Error(msg) {}
};

/// Rejection sampling cannot make progress on the given density.
class DegenerateDensityError : public ValidationError {
 public:
  explicit DegenerateDensityError(const std::string& msg) : ValidationError(msg) {}
};

/// Requested transport mass exceeds the remaining supply.
class InsufficientMassError : public Error {
 public:
  explicit InsufficientMassError(const std::string& msg) : Error(msg) {}
};

}  // namespace denscov
