#pragma once

#include <stdexcept>
#include <string>

namespace proxlin {

enum class ErrorKind {
  kInvalidArgument,       // parameter or config validation
  kInvalidDimension,
  kInfeasibleInit,
  kNumericalInput,        // non-finite values handed to a solver
  kSingularSystem,
  kIntegrationDomain,     // integrand produced a non-finite value
  kNonConvergence,
  kIllConditionedEta,
  kNoFeasiblePoint,
  kIo,
};

inline const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kInvalidArgument: return "invalid-argument";
    case ErrorKind::kInvalidDimension: return "invalid-dimension";
    case ErrorKind::kInfeasibleInit: return "infeasible-initialization";
    case ErrorKind::kNumericalInput: return "numerical-input";
    case ErrorKind::kSingularSystem: return "singular-system";
    case ErrorKind::kIntegrationDomain: return "integration-domain";
    case ErrorKind::kNonConvergence: return "non-convergence";
    case ErrorKind::kIllConditionedEta: return "ill-conditioned-eta";
    case ErrorKind::kNoFeasiblePoint: return "no-feasible-point";
    case ErrorKind::kIo: return "io";
  }
  return "unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

  // Iteration index at which the failure surfaced, -1 if not tied to a step.
  long step() const noexcept { return step_; }

  Error with_step(long step) const {
    Error e(kind_, std::string(what()) + " (at step " + std::to_string(step) + ")", 0);
    e.step_ = step;
    return e;
  }

 private:
  Error(ErrorKind kind, const std::string& full, int) : std::runtime_error(full), kind_(kind) {}

  ErrorKind kind_;
  long step_ = -1;
};

inline void require(bool cond, ErrorKind kind, const std::string& msg) {
  if (!cond) throw Error(kind, msg);
}

}  // namespace proxlin
