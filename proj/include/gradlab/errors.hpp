#pragma once

#include <stdexcept>
#include <string>

namespace gradlab {

/// A problem, spectrum or policy description that violates its invariants.
class InvalidSpec : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// The requested operation is not available for this representation
/// (e.g. a fractional matrix power on a dense Hessian).
class UnsupportedOperation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// An iterative numerical routine failed to reach its accuracy target.
class NumericalFailure : public std::runtime_error {
 public:
  NumericalFailure(const std::string& what, double worst_residual)
      : std::runtime_error(what), worst_residual_(worst_residual) {}

  double worst_residual() const noexcept { return worst_residual_; }

 private:
  double worst_residual_;
};

}  // namespace gradlab
