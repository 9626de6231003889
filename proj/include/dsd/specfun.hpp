#pragma once

// Scalar special functions used by the prior densities.
//
// Every function here is pure and thread-safe. Arguments outside the
// documented domain raise dsd::DomainError.

namespace dsd::specfun {

/// A value that may have been returned on log scale because its magnitude
/// does not fit in a double.
struct SpecFunResult {
  double value = 0.0;
  bool log_scale = false;

  /// Linear-scale value; may be 0 or +inf when `log_scale` is set.
  double linear() const;
  static SpecFunResult from_log(double log_value);
};

double log_gamma(double x);
double log_beta(double a, double b);

/// Regularized lower incomplete gamma P(a, x).
double reg_inc_gamma_p(double a, double x);
/// Regularized upper incomplete gamma Q(a, x) = 1 - P(a, x), accurate in the tail.
double reg_inc_gamma_q(double a, double x);

/// Gauss hypergeometric 2F1(a, b; c; z) for z <= 0, a > 0 and c >= b > 0.
///
/// c == b and c == a reduce to (1 - z)^(-a) and (1 - z)^(-b). Otherwise
/// small |z| uses the Pfaff-transformed power series (all terms positive)
/// and everything else the Euler integral, mapped onto the real line and
/// integrated adaptively on log scale.
double gauss_2f1_negz(double a, double b, double c, double z);
double log_gauss_2f1_negz(double a, double b, double c, double z);
/// log 2F1(a, b; c; -x) from log x; usable where x itself overflows.
double log_gauss_2f1_neg_logx(double a, double b, double c, double log_x);

/// Kummer's confluent hypergeometric U(a, b, z) for a > 0, z > 0, from the
/// Laplace-type integral
///   U(a,b,z) = 1/Gamma(a) * int_0^inf exp(-z t) t^(a-1) (1+t)^(b-a-1) dt.
/// `kummer_u` throws std::overflow_error if the value is not representable.
double kummer_u(double a, double b, double z);
double log_kummer_u(double a, double b, double z);
SpecFunResult kummer_u_scaled(double a, double b, double z);

/// log(1 + exp(x)) without overflow.
double softplus(double x);

/// Standard normal density and quantile.
double normal_pdf(double x);
double normal_quantile(double prob);

}  // namespace dsd::specfun
