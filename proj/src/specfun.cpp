#include "dsd/specfun.hpp"

#include <boost/math/distributions/normal.hpp>
#include <boost/math/special_functions/gamma.hpp>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "dsd/errors.hpp"
#include "dsd/line_integral.hpp"

namespace dsd::specfun {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
// exp() overflows past this.
constexpr double kMaxLog = 709.78;

void require(bool ok, const char* fn, const char* what) {
  if (!ok) throw DomainError(std::string(fn) + ": " + what);
}

// Pfaff-transformed series 2F1(a, c-b; c; w), w in [0, 1). All terms are
// positive since a, c - b, c > 0. Returns log of the sum or NaN when the
// term budget runs out before convergence.
double log_pfaff_series(double a, double cb, double c, double w, int max_terms) {
  double term = 1.0;
  double sum = 1.0;
  double log_scale = 0.0;
  for (int k = 0; k < max_terms; ++k) {
    const double kd = static_cast<double>(k);
    const double ratio = (a + kd) * (cb + kd) / ((c + kd) * (kd + 1.0)) * w;
    term *= ratio;
    sum += term;
    if (sum > 1e280) {
      log_scale += std::log(sum);
      term /= sum;
      sum = 1.0;
    }
    if (ratio < 1.0 && term < 1e-17 * sum) {
      // Remaining tail is bounded by a geometric series with this ratio.
      if (term * ratio / (1.0 - ratio) < 1e-16 * sum) return log_scale + std::log(sum);
    }
  }
  return std::numeric_limits<double>::quiet_NaN();
}

}  // namespace

double SpecFunResult::linear() const { return log_scale ? std::exp(value) : value; }

SpecFunResult SpecFunResult::from_log(double log_value) {
  if (std::abs(log_value) < kMaxLog - 1.0) return {std::exp(log_value), false};
  return {log_value, true};
}

double softplus(double x) { return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

double log_gamma(double x) {
  require(std::isfinite(x) && x > 0.0, "log_gamma", "argument must be positive and finite");
  return boost::math::lgamma(x);
}

double log_beta(double a, double b) {
  require(std::isfinite(a) && a > 0.0 && std::isfinite(b) && b > 0.0, "log_beta",
          "arguments must be positive and finite");
  return log_gamma(a) + log_gamma(b) - log_gamma(a + b);
}

double reg_inc_gamma_p(double a, double x) {
  require(std::isfinite(a) && a > 0.0, "reg_inc_gamma_p", "shape must be positive");
  require(x >= 0.0, "reg_inc_gamma_p", "x must be non-negative");
  if (x == 0.0) return 0.0;
  if (x == kInf) return 1.0;
  return boost::math::gamma_p(a, x);
}

double reg_inc_gamma_q(double a, double x) {
  require(std::isfinite(a) && a > 0.0, "reg_inc_gamma_q", "shape must be positive");
  require(x >= 0.0, "reg_inc_gamma_q", "x must be non-negative");
  if (x == 0.0) return 1.0;
  if (x == kInf) return 0.0;
  return boost::math::gamma_q(a, x);
}

double log_gauss_2f1_negz(double a, double b, double c, double z) {
  require(std::isfinite(a) && a > 0.0, "gauss_2f1_negz", "a must be positive");
  require(std::isfinite(b) && b > 0.0, "gauss_2f1_negz", "b must be positive");
  require(std::isfinite(c), "gauss_2f1_negz", "c must be finite");
  require(c >= b, "gauss_2f1_negz", "requires c >= b (Euler integral validity)");
  require(!std::isnan(z) && z <= 0.0, "gauss_2f1_negz", "z must be non-positive");
  if (z == 0.0) return 0.0;
  if (!std::isfinite(z)) throw DomainError("gauss_2f1_negz: z must be finite");
  return log_gauss_2f1_neg_logx(a, b, c, std::log(-z));
}

double log_gauss_2f1_neg_logx(double a, double b, double c, double log_x) {
  require(std::isfinite(a) && a > 0.0, "gauss_2f1_neg_logx", "a must be positive");
  require(std::isfinite(b) && b > 0.0, "gauss_2f1_neg_logx", "b must be positive");
  require(std::isfinite(c), "gauss_2f1_neg_logx", "c must be finite");
  require(c >= b, "gauss_2f1_neg_logx", "requires c >= b (Euler integral validity)");
  require(!std::isnan(log_x) && log_x < kInf, "gauss_2f1_neg_logx", "log x must be finite");
  if (log_x == -kInf) return 0.0;
  // ell = log(1 + x) without forming x.
  const double ell = softplus(log_x);
  // Exact reductions 2F1(a,b;b;z) = (1-z)^-a and 2F1(a,b;a;z) = (1-z)^-b.
  if (c == b) return -a * ell;
  if (c == a) return -b * ell;

  if (log_x <= 0.0) {
    const double x = std::exp(log_x);
    const double s = log_pfaff_series(a, c - b, c, x / (1.0 + x), 600);
    if (!std::isnan(s)) return -a * ell + s;
  }

  // Euler integral with t = s / (1 + s), s = exp(u):
  //   B(b, c-b) 2F1 = int exp(b u + (a-c) softplus(u) - a softplus(u + ell)) du
  const double eps = c - b;
  quad::LogIntegrand integrand;
  integrand.log_f = [=](double u) { return b * u + (a - c) * softplus(u) - a * softplus(u + ell); };
  integrand.left_rate = b;
  integrand.right_rate = eps;
  const double log_norm = log_gamma(c) - log_gamma(b) - log_gamma(eps);
  if (eps >= 1.0) {
    const quad::ScanWindow window{-ell - 25.0, 25.0, 1.0};
    return log_norm + quad::log_integrate(integrand, window);
  }
  // Slow right tail: past `cut` the integrand equals exp(-eps u - a ell) to
  // double precision, so that piece is exp(-eps cut - a ell) / eps exactly.
  const double cut = 40.0 + std::log1p(a + c);
  const quad::ScanWindow window{-ell - 25.0, cut, 1.0};
  const double log_body = quad::log_integrate(integrand, window, -kInf, cut);
  const double log_tail = -eps * cut - a * ell - std::log(eps);
  const double hi = std::max(log_body, log_tail);
  return log_norm + hi + std::log(std::exp(log_body - hi) + std::exp(log_tail - hi));
}

double gauss_2f1_negz(double a, double b, double c, double z) {
  return std::exp(log_gauss_2f1_negz(a, b, c, z));
}

double log_kummer_u(double a, double b, double z) {
  require(std::isfinite(a) && a > 0.0, "kummer_u", "a must be positive");
  require(std::isfinite(b), "kummer_u", "b must be finite");
  require(std::isfinite(z) && z > 0.0, "kummer_u", "z must be positive");
  const double log_z = std::log(z);
  const double coef = b - a - 1.0;
  // t = exp(shift + v) with shift at the saddle of a u - z e^u, so that the
  // O(a) terms of the exponent stay O(a) rather than O(a |log z|).
  const double shift = std::log(a) - log_z;
  quad::LogIntegrand integrand;
  integrand.log_f = [=](double v) { return a * (v - std::exp(v)) + coef * softplus(v + shift); };
  integrand.left_rate = a;
  integrand.right_rate = kInf;
  const double lo = std::min(0.0, -log_z) - 25.0;
  double hi = std::log(60.0 + 2.0 * (a + std::abs(b))) - log_z + 1.0;
  hi = std::max(hi, lo + 2.0);
  const quad::ScanWindow window{lo - shift, hi - shift, 1.0};
  return a * shift + quad::log_integrate(integrand, window) - log_gamma(a);
}

SpecFunResult kummer_u_scaled(double a, double b, double z) {
  return SpecFunResult::from_log(log_kummer_u(a, b, z));
}

double kummer_u(double a, double b, double z) {
  const double lv = log_kummer_u(a, b, z);
  if (lv > kMaxLog) {
    std::ostringstream os;
    os << "kummer_u: U(" << a << ", " << b << ", " << z << ") overflows (log value " << lv << ")";
    throw std::overflow_error(os.str());
  }
  return std::exp(lv);
}

double normal_pdf(double x) { return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi); }

double normal_quantile(double prob) {
  require(prob > 0.0 && prob < 1.0, "normal_quantile", "probability must lie in (0, 1)");
  return boost::math::quantile(boost::math::normal_distribution<double>(), prob);
}

}  // namespace dsd::specfun
