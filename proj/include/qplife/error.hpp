#pragma once

#include <stdexcept>
#include <string>

namespace qplife {

/// Bad arguments or configuration. The CLI maps this to exit code 2.
class InvalidInput : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A numerical invariant was violated mid-run (norm blow-up, singular sample,
/// non-convergence). The CLI maps this to exit code 3.
class NumericalFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Integrand evaluated exactly on one of its poles.
class SingularPoint : public NumericalFailure {
 public:
  using NumericalFailure::NumericalFailure;
};

/// A decay series never reached the requested fit window.
class InsufficientDecay : public NumericalFailure {
 public:
  using NumericalFailure::NumericalFailure;
};

}  // namespace qplife
