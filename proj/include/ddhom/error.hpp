#pragma once

#include <stdexcept>
#include <string>

namespace ddhom {

/// Input violates a documented precondition (divisibility, SPD, compatibility).
class PreconditionError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

/// An iterative or direct solver failed to deliver the requested accuracy.
class SolverError : public std::runtime_error {
public:
  SolverError(const std::string& what, double final_residual = -1.0)
      : std::runtime_error(what), final_residual_(final_residual) {}

  double final_residual() const noexcept { return final_residual_; }

private:
  double final_residual_;
};

/// A numerical claim could not be certified (e.g. contraction factor >= 1).
class CertificationError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Broken internal bookkeeping; indicates a bug rather than bad input.
class InternalError : public std::logic_error {
public:
  using std::logic_error::logic_error;
};

}  // namespace ddhom
