#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <variant>
#include <vector>

#include "dsd/line_integral.hpp"

namespace dsd {

/// Beta of the second kind: density b^q / B(p,q) * s^(-q-1) (1 + b/s)^(-p-q).
struct B2Params {
  double b = 1.0;
  double p = 0.5;
  double q = 1.5;
};

/// Law of X | y ~ Gamma(alpha, rate beta / y) with y ~ B2(b, p, q).
struct TwoF0Params {
  double alpha = 1.0;
  double beta = 1.0;
  double b = 1.0;
  double p = 0.5;
  double q = 1.5;
};

/// Prior on sigma^2 whose Gamma(alpha_tilde, beta_tilde / sigma^2) mixture
/// equals the TwoF0(alpha, beta, b, p, q) benchmark.
struct DsdParams {
  double alpha = 1.0;
  double beta = 1.0;
  double alpha_tilde = 1.0;
  double beta_tilde = 1.0;
  double b = 1.0;
  double p = 0.5;
  double q = 1.5;

  TwoF0Params benchmark() const { return {alpha, beta, b, p, q}; }
};

using PriorParams = std::variant<B2Params, TwoF0Params, DsdParams>;

void validate(const B2Params& theta);
void validate(const TwoF0Params& theta);
/// Also raises ExistenceError when p > alpha_tilde.
void validate(const DsdParams& theta);

struct SampleOptions {
  std::uint64_t seed = 0;
  std::size_t chunk_size = 65536;
  int threads = 1;
};

// B2 -------------------------------------------------------------------------

double b2_log_pdf(double s, const B2Params& theta);
double b2_pdf(double s, const B2Params& theta);
double b2_cdf(double s, const B2Params& theta);
double b2_quantile(double prob, const B2Params& theta);
/// b * G1 / G2 with G1 ~ Gamma(p), G2 ~ Gamma(q): the same stream for every b.
std::vector<double> b2_sample(const B2Params& theta, std::size_t count, const SampleOptions& opt);
/// Half-t(dof, scale) on sigma is B2(scale^2 dof, 1/2, dof/2) on sigma^2.
B2Params halft_to_b2(double dof, double scale);

// 2F0 ------------------------------------------------------------------------

double twoF0_log_pdf(double x, const TwoF0Params& theta);
double twoF0_pdf(double x, const TwoF0Params& theta);
/// lim x^(q+1) f(x) as x -> inf.
double twoF0_tail_constant(const TwoF0Params& theta);
std::vector<double> twoF0_sample(const TwoF0Params& theta, std::size_t count,
                                 const SampleOptions& opt);
double twoF0_mean(const TwoF0Params& theta);

// DSD ------------------------------------------------------------------------

/// Reduces to B2(b beta_tilde / beta, alpha, q) at p == alpha_tilde.
double dsd_log_pdf(double s, const DsdParams& theta);
double dsd_pdf(double s, const DsdParams& theta);
/// log of the normalizing constant; also the limit of s^(q+1) f(s).
double dsd_log_constant(const DsdParams& theta);
/// Prior mean of sigma^2 (q > 1), so that E[V] matches the benchmark mean.
double dsd_mean_sigma2(const DsdParams& theta);

/// Distribution on s > 0 with log-scale table, exact CDF and inverse-CDF sampling.
class ScaleDistribution {
 public:
  double log_pdf(double s) const;
  double pdf(double s) const;
  double cdf(double s) const;
  double sf(double s) const;
  /// Newton-refined quantile on the exact CDF.
  double quantile(double prob) const;
  std::vector<double> sample(std::size_t count, const SampleOptions& opt) const;
  double log_total_mass() const { return line_->log_total_mass(); }
  std::size_t table_nodes() const { return line_->node_count(); }

 protected:
  ScaleDistribution(quad::LogIntegrand log_density_u, quad::ScanWindow window);

 private:
  std::shared_ptr<const quad::LineDistribution> line_;
};

class DsdDistribution : public ScaleDistribution {
 public:
  explicit DsdDistribution(const DsdParams& theta);
  const DsdParams& params() const { return theta_; }

 private:
  DsdParams theta_;
};

class TwoF0Distribution : public ScaleDistribution {
 public:
  explicit TwoF0Distribution(const TwoF0Params& theta);
  const TwoF0Params& params() const { return theta_; }

 private:
  TwoF0Params theta_;
};

std::vector<double> dsd_sample(const DsdParams& theta, std::size_t count, const SampleOptions& opt);

struct ResidualReport {
  std::vector<double> v;
  std::vector<double> mixture;    // int Gamma(v; alpha_tilde, beta_tilde/s) f_DSD(s) ds
  std::vector<double> benchmark;  // twoF0_pdf(v)
  double max_rel_error = 0.0;
  double worst_v = 0.0;
};

/// Mixing integral of the approximate sampling-variance law against the DSD
/// prior, compared pointwise with the benchmark density.
ResidualReport integral_equation_residual(const DsdParams& theta, std::span<const double> v_grid);

/// Probability grid prob_lo..prob_hi (equally spaced) mapped through the
/// benchmark quantile function.
std::vector<double> benchmark_quantile_grid(const TwoF0Params& theta, double prob_lo,
                                            double prob_hi, std::size_t points);

}  // namespace dsd
