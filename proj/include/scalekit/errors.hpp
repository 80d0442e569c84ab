#pragma once

#include <stdexcept>
#include <string>

namespace scalekit {

/// Invalid input data or a violated operation precondition.
/// The CLI maps this to exit code 2.
class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(const std::string& what) : std::runtime_error(what) {}
};

/// Numerical failure: optimizer breakdown, a cross-check mismatch, or a
/// non-finite value where a finite one is required.
/// The CLI maps this to exit code 3.
class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace scalekit
