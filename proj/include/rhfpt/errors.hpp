#pragma once

#include <stdexcept>
#include <string>

namespace rhfpt {

/// Bad problem data or shape mismatch.
struct InputError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// Operation called on a state outside its domain (wrong Fermi-level case,
/// occupancy box violation, eigenvalue pinned at a threshold, ...).
struct DomainError : std::domain_error {
  using std::domain_error::domain_error;
};

/// Iterative solver exhausted its budget.
struct ConvergenceError : std::runtime_error {
  ConvergenceError(const std::string& what, double res)
      : std::runtime_error(what), residual(res) {}
  double residual;
};

/// A quantity that should be resolved to tolerance is not (quadrature that
/// does not settle under refinement, non-finite energy term, ...).
struct AccuracyError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// An internal invariant failed, pointing at a structural assumption of the
/// theory (convexity regression, lost coercivity, ...).
struct StructuralError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace rhfpt
