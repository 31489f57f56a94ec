#pragma once

#include <stdexcept>
#include <string>

namespace curvcrb {

/// Invalid input: bad parameter values, malformed configuration, wrong sizes.
class DomainError : public std::invalid_argument {
 public:
  explicit DomainError(const std::string& what) : std::invalid_argument(what) {}
};

/// The computation itself failed: singular information, nonfinite integrand,
/// quadrature budget exceeded, solver breakdown.
class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace curvcrb
