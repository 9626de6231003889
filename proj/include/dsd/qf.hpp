#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "dsd/structure.hpp"

namespace dsd {

/// Two-moment Gamma(shape alpha_tilde, rate beta_tilde) approximation of
/// V | sigma^2 = 1.
struct GammaApprox {
  double alpha_tilde = 0.0;
  double beta_tilde = 0.0;
  double mean() const { return alpha_tilde / beta_tilde; }
  double variance() const { return alpha_tilde / (beta_tilde * beta_tilde); }
};

GammaApprox gamma_approx(const QfWeights& w);

struct QfMoments {
  double mean = 0.0;
  double variance = 0.0;
};

/// Exact moments of V = sigma^2 / (n-1) * sum(lambda_i X_i), X_i ~ chi^2_1.
QfMoments qf_moments(const QfWeights& w, double sigma2);

/// Series controls for the density of Q = sum(lambda_i X_i). rho <= 0 selects
/// default_rho().
struct RubenConfig {
  double rho = 0.0;
  int max_terms = 10000;
  double tail_tol = 1e-12;
};

/// 2 lambda_min lambda_max / (lambda_min + lambda_max).
double default_rho(const std::vector<double>& weights);

/// Series for Q = sum(lambda_i X_i) with coefficients computed once.
class RubenSeries {
 public:
  RubenSeries(const QfWeights& w, const RubenConfig& cfg = {});
  double pdf(double q) const;
  double cdf(double q) const;
  double rho() const { return rho_; }
  /// Empty for the closed-form equal-weight case.
  const std::vector<double>& coefficients() const { return c_; }

 private:
  double half_r_ = 0.0;
  double rho_ = 0.0;
  bool closed_form_ = false;
  std::vector<double> c_;
};

/// Density and CDF of Q = sum(lambda_i X_i) (no (n-1) / sigma^2 scaling).
double ruben_pdf(double q, const QfWeights& w, const RubenConfig& cfg = {});
double ruben_cdf(double q, const QfWeights& w, const RubenConfig& cfg = {});

/// Mixture coefficients c_0..c_K used by the series at the given config,
/// after the truncation rule has been applied.
std::vector<double> ruben_coefficients(const QfWeights& w, const RubenConfig& cfg = {});

/// Density of V itself at sigma^2 from the series.
double sampling_variance_pdf(double v, const QfWeights& w, double sigma2,
                             const RubenConfig& cfg = {});

/// count draws of V = sigma^2/(n-1) * sum(lambda_i X_i); deterministic in
/// (seed, count, chunk_size).
std::vector<double> sample_v(const QfWeights& w, double sigma2, std::size_t count,
                             std::uint64_t seed, std::size_t chunk_size = 65536, int threads = 1);

}  // namespace dsd
