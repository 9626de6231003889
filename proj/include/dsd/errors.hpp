#pragma once

#include <stdexcept>
#include <string>

namespace dsd {

/// Invalid argument or parameter outside the domain of a function.
class DomainError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// The DSD prior does not exist for the requested parameters (p > alpha_tilde).
class ExistenceError : public DomainError {
 public:
  ExistenceError(double p, double alpha_tilde);
  double p() const noexcept { return p_; }
  double alpha_tilde() const noexcept { return alpha_tilde_; }

 private:
  double p_;
  double alpha_tilde_;
};

/// A numerical procedure (series, quadrature, root search) failed to converge.
/// `diagnostics()` carries whatever partial information was available.
class NumericalError : public std::runtime_error {
 public:
  NumericalError(const std::string& what, std::string diagnostics = {})
      : std::runtime_error(what), diagnostics_(std::move(diagnostics)) {}
  const std::string& diagnostics() const noexcept { return diagnostics_; }

 private:
  std::string diagnostics_;
};

}  // namespace dsd
