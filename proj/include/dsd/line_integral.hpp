#pragma once

#include <functional>
#include <limits>
#include <vector>

namespace dsd::quad {

/// Integrand exp(log_f(u)) on the real line, with its tail behaviour.
///
/// `left_rate` r_L > 0 means log_f(u) ~ r_L * u + const as u -> -inf;
/// `right_rate` r_R > 0 means log_f(u) ~ -r_R * u + const as u -> +inf.
/// An infinite rate means faster-than-exponential decay on that side.
/// Exponential tails are mapped onto (0, 1] with y = exp(r (u - u_edge)),
/// which makes them finite-interval integrals of a bounded function.
struct LogIntegrand {
  std::function<double(double)> log_f;
  double left_rate = std::numeric_limits<double>::infinity();
  double right_rate = std::numeric_limits<double>::infinity();
};

/// Region scanned on a uniform grid to locate the bulk of the mass. Outside
/// [lo, hi] the integrand must already be in its asymptotic regime (for
/// exponential tails) or decaying (for super-exponential tails).
struct ScanWindow {
  double lo = -30.0;
  double hi = 30.0;
  double step = 1.0;
};

struct LineOptions {
  double rel_tol = 1e-13;
  /// Log-drop below the peak at which the core region ends.
  double core_drop = 32.0;
  /// Log-drop at which super-exponential tails are truncated.
  double tail_drop = 60.0;
  std::size_t max_intervals = 4000;
};

/// Location and log-height of the integrand's maximum inside the window
/// (refined by golden-section search around the best grid point).
struct Peak {
  double location = 0.0;
  double log_value = -std::numeric_limits<double>::infinity();
};

Peak find_peak(const LogIntegrand& integrand, const ScanWindow& window,
               double lower = -std::numeric_limits<double>::infinity(),
               double upper = std::numeric_limits<double>::infinity());

/// log of the integral of exp(log_f(u)) over [lower, upper].
/// Throws NumericalError when quadrature does not reach `rel_tol` and
/// returns -inf for an identically-zero integrand.
double log_integrate(const LogIntegrand& integrand, const ScanWindow& window,
                     double lower = -std::numeric_limits<double>::infinity(),
                     double upper = std::numeric_limits<double>::infinity(),
                     const LineOptions& options = {});

/// Continuous distribution on u in R given by an unnormalized log-density,
/// with exact (quadrature) CDF evaluation and a monotone cubic Hermite
/// inverse table for fast sampling.
///
/// The table spans the region where both CDF and survival exceed
/// `table_tail`; node spacing is refined until the Hermite interpolant of the
/// CDF matches exact segment integrals to `table_tol` at every midpoint.
class LineDistribution {
 public:
  struct Options {
    double table_tail = 1e-12;
    double table_tol = 1e-10;
    double initial_step = 0.5;
    std::size_t max_nodes = 200000;
    LineOptions line{};
  };

  LineDistribution(LogIntegrand log_density, ScanWindow window);
  LineDistribution(LogIntegrand log_density, ScanWindow window, Options options);

  double log_total_mass() const { return log_total_; }
  double mode() const { return mode_; }

  /// Exact CDF / survival at u (quadrature from the nearest table node).
  double cdf(double u) const;
  double sf(double u) const;
  /// Normalized density exp(log_f(u)) / total.
  double density(double u) const;
  /// Inverse CDF by safeguarded Newton iteration on the exact CDF.
  double quantile(double prob) const;
  /// Inverse CDF from the Hermite table; used by samplers.
  double table_quantile(double prob) const;

  std::size_t node_count() const { return nodes_.size(); }
  const std::vector<double>& nodes() const { return nodes_; }

 private:
  double segment_mass(double a, double b) const;
  double hermite_cdf(std::size_t seg, double u) const;
  void build_table();

  LogIntegrand integrand_;
  ScanWindow window_;
  Options options_;
  double log_total_ = 0.0;
  double mode_ = 0.0;
  std::vector<double> nodes_;  // u_i
  std::vector<double> cdf_;    // F(u_i)
  std::vector<double> sf_;     // 1 - F(u_i), accumulated from the right
  std::vector<double> slope_;  // interpolation slopes (Fritsch-Carlson limited)
  std::vector<double> dens_;   // exact normalized densities at nodes
};

}  // namespace dsd::quad
