#pragma once

#include <stdexcept>
#include <string>

namespace divmkt {

/// Euler stepping produced a non-finite state; carries the failing step.
class SimulationDiverged : public std::runtime_error {
 public:
  SimulationDiverged(const std::string& what, long step)
      : std::runtime_error(what + " (step " + std::to_string(step) + ")"),
        step_(step) {}
  long step() const noexcept { return step_; }

 private:
  long step_;
};

/// Drift requested at or beyond the log-pole (largest weight >= 1-delta).
class SingularDrift : public std::domain_error {
  using std::domain_error::domain_error;
};

/// Rejection sampling exhausted its attempt budget; carries the empirical
/// acceptance estimate observed so far.
class AcceptanceTooRare : public std::runtime_error {
 public:
  AcceptanceTooRare(const std::string& what, double rate_estimate, long attempts)
      : std::runtime_error(what), rate_(rate_estimate), attempts_(attempts) {}
  double rate_estimate() const noexcept { return rate_; }
  long attempts() const noexcept { return attempts_; }

 private:
  double rate_;
  long attempts_;
};

/// The node increments do not contain the origin in the interior of their
/// convex hull, so no equivalent martingale re-weighting exists.
class NoTiltExists : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// A model broke a contract it promised (volatility bounds, monotone clock).
class ModelContractViolation : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// A numerical routine failed to converge within its budget.
class NumericalFailure : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Per-step portfolio compounding produced a nonpositive value factor.
class StepSizeError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace divmkt
