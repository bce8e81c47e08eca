#pragma once

#include <stdexcept>
#include <string>

namespace nlcone {

// Thrown when arguments violate a documented precondition.
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Thrown when an iterative scheme (quadrature, extrapolation, bisection)
// fails to reach its tolerance.  Carries the stage name so callers can
// attribute the failure.
class NonConvergence : public std::runtime_error {
 public:
  NonConvergence(const std::string& stage, const std::string& what)
      : std::runtime_error(stage + ": " + what), stage_(stage) {}
  const std::string& stage() const { return stage_; }

 private:
  std::string stage_;
};

// Thrown when two evaluation routes that must agree do not.
class Inconsistency : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace nlcone
