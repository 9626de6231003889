#pragma once

#include <cstddef>
#include <functional>
#include <span>

namespace dsd::quad {

struct QuadResult {
  double value = 0.0;
  double abs_error = 0.0;
  std::size_t evaluations = 0;
  std::size_t intervals = 0;
  bool converged = false;
};

struct QuadOptions {
  double abs_tol = 0.0;
  double rel_tol = 1e-12;
  std::size_t max_intervals = 2000;
};

/// Globally adaptive 21-point Gauss-Kronrod quadrature of a finite-valued
/// integrand. `breakpoints` is a strictly increasing list of at least two
/// points; each consecutive pair forms an initial panel. Subdivision always
/// splits the panel with the largest error estimate.
QuadResult integrate(const std::function<double(double)>& f, std::span<const double> breakpoints,
                     const QuadOptions& options = {});

QuadResult integrate(const std::function<double(double)>& f, double lower, double upper,
                     const QuadOptions& options = {});

}  // namespace dsd::quad
