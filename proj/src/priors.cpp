#include "dsd/priors.hpp"

#include <algorithm>
#include <boost/math/special_functions/beta.hpp>
#include <cmath>
#include <limits>
#include <sstream>

#include "dsd/errors.hpp"
#include "dsd/monte_carlo.hpp"
#include "dsd/specfun.hpp"

namespace dsd {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::string existence_message(double p, double alpha_tilde) {
  std::ostringstream os;
  os.precision(17);
  os << "DSD prior does not exist: p = " << p << " exceeds alpha_tilde = " << alpha_tilde
     << " (requires p <= alpha_tilde)";
  return os.str();
}

bool positive(double x) { return std::isfinite(x) && x > 0.0; }

void require_positive_arg(double s, const char* fn) {
  if (!(s > 0.0) || std::isnan(s)) throw DomainError(std::string(fn) + ": argument must be positive");
}

double log_gamma_pdf_rate(double x, double shape, double rate) {
  return shape * std::log(rate) + (shape - 1.0) * std::log(x) - rate * x -
         specfun::log_gamma(shape);
}

B2Params dsd_boundary_b2(const DsdParams& t) { return {t.b * t.beta_tilde / t.beta, t.alpha, t.q}; }

}  // namespace

ExistenceError::ExistenceError(double p, double alpha_tilde)
    : DomainError(existence_message(p, alpha_tilde)), p_(p), alpha_tilde_(alpha_tilde) {}

void validate(const B2Params& t) {
  if (!positive(t.b) || !positive(t.p) || !positive(t.q)) {
    throw DomainError("B2: b, p and q must be positive and finite");
  }
}

void validate(const TwoF0Params& t) {
  if (!positive(t.alpha) || !positive(t.beta) || !positive(t.b) || !positive(t.p) ||
      !positive(t.q)) {
    throw DomainError("2F0: alpha, beta, b, p and q must be positive and finite");
  }
}

void validate(const DsdParams& t) {
  if (!positive(t.alpha) || !positive(t.beta) || !positive(t.alpha_tilde) ||
      !positive(t.beta_tilde) || !positive(t.b) || !positive(t.p) || !positive(t.q)) {
    throw DomainError("DSD: all parameters must be positive and finite");
  }
  if (t.p > t.alpha_tilde) throw ExistenceError(t.p, t.alpha_tilde);
}

// B2 -------------------------------------------------------------------------

double b2_log_pdf(double s, const B2Params& t) {
  validate(t);
  require_positive_arg(s, "b2_pdf");
  if (std::isinf(s)) return -kInf;
  return t.q * std::log(t.b) - specfun::log_beta(t.p, t.q) - (t.q + 1.0) * std::log(s) -
         (t.p + t.q) * std::log1p(t.b / s);
}

double b2_pdf(double s, const B2Params& t) { return std::exp(b2_log_pdf(s, t)); }

double b2_cdf(double s, const B2Params& t) {
  validate(t);
  if (std::isnan(s)) throw DomainError("b2_cdf: NaN argument");
  if (s <= 0.0) return 0.0;
  if (std::isinf(s)) return 1.0;
  // s / (s + b) ~ Beta(p, q); use the complement when it is the smaller side.
  const double x = s / (s + t.b);
  if (x <= 0.5) return boost::math::ibeta(t.p, t.q, x);
  return boost::math::ibetac(t.q, t.p, t.b / (s + t.b));
}

double b2_quantile(double prob, const B2Params& t) {
  validate(t);
  if (!(prob >= 0.0 && prob <= 1.0)) throw DomainError("b2_quantile: probability outside [0, 1]");
  if (prob == 0.0) return 0.0;
  if (prob == 1.0) return kInf;
  double complement = 0.0;
  const double x = boost::math::ibeta_inv(t.p, t.q, prob, &complement);
  return t.b * x / complement;
}

std::vector<double> b2_sample(const B2Params& t, std::size_t count, const SampleOptions& opt) {
  validate(t);
  if (count < 1) throw DomainError("b2_sample: count must be at least 1");
  return mc::generate({opt.seed, count, opt.chunk_size, opt.threads}, [&](mc::Engine& e) {
    const double g1 = mc::gamma_draw(e, t.p);
    const double g2 = mc::gamma_draw(e, t.q);
    return t.b * (g1 / g2);
  });
}

B2Params halft_to_b2(double dof, double scale) {
  if (!positive(dof) || !positive(scale)) throw DomainError("halft_to_b2: dof and scale must be positive");
  return {scale * scale * dof, 0.5, 0.5 * dof};
}

// 2F0 ------------------------------------------------------------------------

double twoF0_log_pdf(double x, const TwoF0Params& t) {
  validate(t);
  require_positive_arg(x, "twoF0_pdf");
  if (std::isinf(x)) return -kInf;
  const double z = x * t.beta / t.b;
  const double log_const = std::log(t.beta) + specfun::log_gamma(t.alpha + t.q) +
                           specfun::log_gamma(t.p + t.q) - std::log(t.b) -
                           specfun::log_gamma(t.alpha) - specfun::log_gamma(t.p) -
                           specfun::log_gamma(t.q);
  return log_const + (t.alpha - 1.0) * std::log(z) +
         specfun::log_kummer_u(t.alpha + t.q, 1.0 + t.alpha - t.p, z);
}

double twoF0_pdf(double x, const TwoF0Params& t) { return std::exp(twoF0_log_pdf(x, t)); }

double twoF0_tail_constant(const TwoF0Params& t) {
  validate(t);
  return std::exp(t.q * std::log(t.b / t.beta) + specfun::log_gamma(t.p + t.q) -
                  specfun::log_gamma(t.p) - specfun::log_beta(t.alpha, t.q));
}

double twoF0_mean(const TwoF0Params& t) {
  validate(t);
  if (t.q <= 1.0) return kInf;
  return t.b * t.p / (t.q - 1.0) * t.alpha / t.beta;
}

std::vector<double> twoF0_sample(const TwoF0Params& t, std::size_t count, const SampleOptions& opt) {
  validate(t);
  if (count < 1) throw DomainError("twoF0_sample: count must be at least 1");
  return mc::generate({opt.seed, count, opt.chunk_size, opt.threads}, [&](mc::Engine& e) {
    const double g1 = mc::gamma_draw(e, t.p);
    const double g2 = mc::gamma_draw(e, t.q);
    const double sigma2 = t.b * (g1 / g2);
    return sigma2 * mc::gamma_draw(e, t.alpha) / t.beta;
  });
}

// DSD ------------------------------------------------------------------------

double dsd_log_constant(const DsdParams& t) {
  validate(t);
  return t.q * std::log(t.b * t.beta_tilde / t.beta) - specfun::log_beta(t.p, t.q) +
         specfun::log_gamma(t.alpha_tilde) - specfun::log_gamma(t.q + t.alpha_tilde) +
         specfun::log_gamma(t.q + t.alpha) - specfun::log_gamma(t.alpha);
}

namespace {

// Generic DSD log density at s = exp(log_s); finite for any finite log_s.
double dsd_log_pdf_at_log(double log_s, const DsdParams& t) {
  const double log_x = std::log(t.b) + std::log(t.beta_tilde) - std::log(t.beta) - log_s;
  return dsd_log_constant(t) - (t.q + 1.0) * log_s +
         specfun::log_gauss_2f1_neg_logx(t.q + t.alpha, t.q + t.p, t.q + t.alpha_tilde, log_x);
}

}  // namespace

double dsd_log_pdf(double s, const DsdParams& t) {
  validate(t);
  require_positive_arg(s, "dsd_pdf");
  if (std::isinf(s)) return -kInf;
  if (t.p == t.alpha_tilde) return b2_log_pdf(s, dsd_boundary_b2(t));
  return dsd_log_pdf_at_log(std::log(s), t);
}

double dsd_pdf(double s, const DsdParams& t) { return std::exp(dsd_log_pdf(s, t)); }

double dsd_mean_sigma2(const DsdParams& t) {
  validate(t);
  if (t.q <= 1.0) return kInf;
  return twoF0_mean(t.benchmark()) * t.beta_tilde / t.alpha_tilde;
}

// Distributions on log scale ---------------------------------------------------

ScaleDistribution::ScaleDistribution(quad::LogIntegrand log_density_u, quad::ScanWindow window)
    : line_(std::make_shared<const quad::LineDistribution>(std::move(log_density_u), window)) {}

double ScaleDistribution::log_pdf(double s) const {
  require_positive_arg(s, "pdf");
  const double u = std::log(s);
  return std::log(line_->density(u)) - u;
}

double ScaleDistribution::pdf(double s) const { return std::exp(log_pdf(s)); }

double ScaleDistribution::cdf(double s) const {
  if (std::isnan(s)) throw DomainError("cdf: NaN argument");
  if (s <= 0.0) return 0.0;
  return line_->cdf(std::log(s));
}

double ScaleDistribution::sf(double s) const {
  if (std::isnan(s)) throw DomainError("sf: NaN argument");
  if (s <= 0.0) return 1.0;
  return line_->sf(std::log(s));
}

double ScaleDistribution::quantile(double prob) const { return std::exp(line_->quantile(prob)); }

std::vector<double> ScaleDistribution::sample(std::size_t count, const SampleOptions& opt) const {
  if (count < 1) throw DomainError("sample: count must be at least 1");
  const auto line = line_;
  return mc::generate({opt.seed, count, opt.chunk_size, opt.threads}, [line](mc::Engine& e) {
    return std::exp(line->table_quantile(mc::uniform_open(e)));
  });
}

namespace {

quad::LogIntegrand dsd_line_integrand(const DsdParams& t) {
  validate(t);
  quad::LogIntegrand g;
  if (t.p == t.alpha_tilde) {
    g.log_f = [t](double u) { return u + dsd_log_pdf(std::exp(u), t); };
  } else {
    g.log_f = [t](double u) { return u + dsd_log_pdf_at_log(u, t); };
  }
  g.left_rate = std::min(t.p, t.alpha);
  g.right_rate = t.q;
  return g;
}

quad::ScanWindow dsd_window(const DsdParams& t) {
  const double c1 = std::log(t.b * t.beta_tilde / t.beta);
  const double c2 = std::log(t.b);
  const double c3 = std::log(t.b * t.beta_tilde / t.alpha_tilde);
  return {std::min({c1, c2, c3}) - 30.0, std::max({c1, c2, c3}) + 30.0, 1.0};
}

quad::LogIntegrand twoF0_line_integrand(const TwoF0Params& t) {
  validate(t);
  quad::LogIntegrand g;
  g.log_f = [t](double u) { return u + twoF0_log_pdf(std::exp(u), t); };
  g.left_rate = std::min(t.p, t.alpha);
  g.right_rate = t.q;
  return g;
}

quad::ScanWindow twoF0_window(const TwoF0Params& t) {
  const double c1 = std::log(t.b);
  const double c2 = std::log(t.b * t.alpha / t.beta);
  return {std::min(c1, c2) - 30.0, std::max(c1, c2) + 30.0, 1.0};
}

}  // namespace

DsdDistribution::DsdDistribution(const DsdParams& theta)
    : ScaleDistribution(dsd_line_integrand(theta), dsd_window(theta)), theta_(theta) {}

TwoF0Distribution::TwoF0Distribution(const TwoF0Params& theta)
    : ScaleDistribution(twoF0_line_integrand(theta), twoF0_window(theta)), theta_(theta) {}

std::vector<double> dsd_sample(const DsdParams& theta, std::size_t count, const SampleOptions& opt) {
  return DsdDistribution(theta).sample(count, opt);
}

ResidualReport integral_equation_residual(const DsdParams& t, std::span<const double> v_grid) {
  validate(t);
  const quad::ScanWindow prior_window = dsd_window(t);
  ResidualReport report;
  for (double v : v_grid) {
    require_positive_arg(v, "integral_equation_residual");
    quad::LogIntegrand g;
    const quad::LogIntegrand prior = dsd_line_integrand(t);
    g.log_f = [&t, &prior, v](double u) {
      return log_gamma_pdf_rate(v, t.alpha_tilde, t.beta_tilde * std::exp(-u)) + prior.log_f(u);
    };
    g.left_rate = kInf;
    g.right_rate = t.alpha_tilde + t.q;
    const double centre = std::log(t.beta_tilde * v / t.alpha_tilde);
    const quad::ScanWindow window{std::min(prior_window.lo, centre - 30.0),
                                  std::max(prior_window.hi, centre + 30.0), 1.0};
    const double lhs = std::exp(quad::log_integrate(g, window));
    const double rhs = twoF0_pdf(v, t.benchmark());
    const double rel = std::abs(lhs - rhs) / rhs;
    report.v.push_back(v);
    report.mixture.push_back(lhs);
    report.benchmark.push_back(rhs);
    if (!(rel <= report.max_rel_error)) {
      report.max_rel_error = rel;
      report.worst_v = v;
    }
  }
  return report;
}

std::vector<double> benchmark_quantile_grid(const TwoF0Params& theta, double prob_lo,
                                            double prob_hi, std::size_t points) {
  if (!(prob_lo > 0.0 && prob_hi < 1.0 && prob_lo < prob_hi) || points < 2) {
    throw DomainError("benchmark_quantile_grid: need 0 < prob_lo < prob_hi < 1 and points >= 2");
  }
  const TwoF0Distribution dist(theta);
  std::vector<double> grid(points);
  for (std::size_t i = 0; i < points; ++i) {
    const double prob = prob_lo + (prob_hi - prob_lo) * static_cast<double>(i) / (points - 1.0);
    grid[i] = dist.quantile(prob);
  }
  return grid;
}

}  // namespace dsd
