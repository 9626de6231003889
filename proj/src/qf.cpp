#include "dsd/qf.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "dsd/errors.hpp"
#include "dsd/monte_carlo.hpp"
#include "dsd/specfun.hpp"

namespace dsd {
namespace {

void validate_weights(const QfWeights& w, const char* fn) {
  if (w.weights.empty()) throw DomainError(std::string(fn) + ": no positive weights");
  if (w.n_predictor < 2) throw DomainError(std::string(fn) + ": n_predictor must be at least 2");
  for (double l : w.weights) {
    if (!std::isfinite(l) || l <= 0.0) {
      throw DomainError(std::string(fn) + ": weights must be positive and finite");
    }
  }
}

bool all_equal(const std::vector<double>& w) {
  const auto [lo, hi] = std::minmax_element(w.begin(), w.end());
  return *hi - *lo <= 4.0 * std::numeric_limits<double>::epsilon() * *hi;
}

double gamma_log_pdf(double x, double shape, double scale) {
  return (shape - 1.0) * std::log(x) - x / scale - shape * std::log(scale) -
         specfun::log_gamma(shape);
}

double resolve_rho(const QfWeights& w, const RubenConfig& cfg) {
  const double rho = cfg.rho > 0.0 ? cfg.rho : default_rho(w.weights);
  for (double l : w.weights) {
    if (!(std::abs(1.0 - rho / l) < 1.0)) {
      std::ostringstream os;
      os << "ruben: rho = " << rho << " violates |1 - rho/lambda| < 1 for lambda = " << l;
      throw DomainError(os.str());
    }
  }
  return rho;
}

}  // namespace

GammaApprox gamma_approx(const QfWeights& w) {
  validate_weights(w, "gamma_approx");
  double s1 = 0.0;
  double s2 = 0.0;
  for (double l : w.weights) {
    s1 += l;
    s2 += l * l;
  }
  return {s1 * s1 / (2.0 * s2), 0.5 * (w.n_predictor - 1) * s1 / s2};
}

QfMoments qf_moments(const QfWeights& w, double sigma2) {
  validate_weights(w, "qf_moments");
  if (!(sigma2 > 0.0) || !std::isfinite(sigma2)) throw DomainError("qf_moments: sigma2 must be positive");
  double s1 = 0.0;
  double s2 = 0.0;
  for (double l : w.weights) {
    s1 += l;
    s2 += l * l;
  }
  const double n1 = w.n_predictor - 1.0;
  return {sigma2 * s1 / n1, 2.0 * sigma2 * sigma2 * s2 / (n1 * n1)};
}

double default_rho(const std::vector<double>& weights) {
  if (weights.empty()) throw DomainError("default_rho: no weights");
  const auto [lo, hi] = std::minmax_element(weights.begin(), weights.end());
  return 2.0 * *lo * *hi / (*lo + *hi);
}

std::vector<double> ruben_coefficients(const QfWeights& w, const RubenConfig& cfg) {
  validate_weights(w, "ruben");
  if (cfg.max_terms < 1) throw DomainError("ruben: max_terms must be positive");
  const double rho = resolve_rho(w, cfg);
  const std::size_t r = w.weights.size();
  std::vector<double> a(r);
  double log_c0 = 0.0;
  double a_max = 0.0;
  bool nonnegative = true;
  for (std::size_t i = 0; i < r; ++i) {
    a[i] = 1.0 - rho / w.weights[i];
    log_c0 += 0.5 * std::log(rho / w.weights[i]);
    a_max = std::max(a_max, std::abs(a[i]));
    nonnegative = nonnegative && a[i] >= 0.0;
  }
  std::vector<double> c{std::exp(log_c0)};
  if (a_max == 0.0) return c;

  // G_k = sum_i a_i^k; then k c_k = 1/2 sum_{l<k} G_{k-l} c_l.
  std::vector<double> g{0.0};
  std::vector<double> powers(r, 1.0);
  double sum = c[0];
  double abs_sum = c[0];
  int quiet = 0;
  for (int k = 1; k < cfg.max_terms; ++k) {
    double gk = 0.0;
    for (std::size_t i = 0; i < r; ++i) {
      powers[i] *= a[i];
      gk += powers[i];
    }
    g.push_back(gk);
    double acc = 0.0;
    for (int l = 0; l < k; ++l) acc += g[k - l] * c[l];
    const double ck = acc / (2.0 * k);
    c.push_back(ck);
    sum += ck;
    abs_sum += std::abs(ck);
    if (nonnegative) {
      // Mixture weights: the tail mass is exactly 1 - sum.
      if (1.0 - sum <= std::max(cfg.tail_tol, 64.0 * std::numeric_limits<double>::epsilon())) {
        return c;
      }
    } else {
      const bool small = std::abs(ck) <= cfg.tail_tol && std::abs(ck) * a_max / (1.0 - a_max) <= cfg.tail_tol;
      quiet = small ? quiet + 1 : 0;
      if (quiet >= 2) return c;
    }
  }
  std::ostringstream diag;
  diag << "terms=" << cfg.max_terms << " rho=" << rho << " partial_sum=" << sum
       << " abs_sum=" << abs_sum << " last_term=" << c.back() << " max|1-rho/lambda|=" << a_max;
  throw NumericalError("ruben: series did not converge within max_terms", diag.str());
}

RubenSeries::RubenSeries(const QfWeights& w, const RubenConfig& cfg)
    : half_r_(0.5 * static_cast<double>(w.weights.size())) {
  validate_weights(w, "ruben");
  if (all_equal(w.weights) && cfg.rho <= 0.0) {
    closed_form_ = true;
    rho_ = w.weights.front();
    return;
  }
  c_ = ruben_coefficients(w, cfg);
  rho_ = cfg.rho > 0.0 ? cfg.rho : default_rho(w.weights);
}

double RubenSeries::pdf(double q) const {
  if (!(q > 0.0) || !std::isfinite(q)) throw DomainError("ruben_pdf: argument must be positive");
  const double scale = 2.0 * rho_;
  double log_term = gamma_log_pdf(q, half_r_, scale);
  if (closed_form_) return std::exp(log_term);
  const double step = std::log(q / scale);
  double total = 0.0;
  for (std::size_t k = 0; k < c_.size(); ++k) {
    total += c_[k] * std::exp(log_term);
    log_term += step - std::log(half_r_ + static_cast<double>(k));
  }
  return std::max(total, 0.0);
}

double RubenSeries::cdf(double q) const {
  if (std::isnan(q) || q < 0.0) throw DomainError("ruben_cdf: argument must be non-negative");
  if (q == 0.0) return 0.0;
  if (std::isinf(q)) return 1.0;
  const double x = q / (2.0 * rho_);
  if (closed_form_) return specfun::reg_inc_gamma_p(half_r_, x);
  double total = 0.0;
  for (std::size_t k = 0; k < c_.size(); ++k) {
    total += c_[k] * specfun::reg_inc_gamma_p(half_r_ + static_cast<double>(k), x);
  }
  return std::clamp(total, 0.0, 1.0);
}

double ruben_pdf(double q, const QfWeights& w, const RubenConfig& cfg) {
  return RubenSeries(w, cfg).pdf(q);
}

double ruben_cdf(double q, const QfWeights& w, const RubenConfig& cfg) {
  return RubenSeries(w, cfg).cdf(q);
}

double sampling_variance_pdf(double v, const QfWeights& w, double sigma2, const RubenConfig& cfg) {
  if (!(sigma2 > 0.0)) throw DomainError("sampling_variance_pdf: sigma2 must be positive");
  const double factor = (w.n_predictor - 1.0) / sigma2;
  return factor * ruben_pdf(v * factor, w, cfg);
}

std::vector<double> sample_v(const QfWeights& w, double sigma2, std::size_t count,
                             std::uint64_t seed, std::size_t chunk_size, int threads) {
  validate_weights(w, "sample_v");
  if (count < 1) throw DomainError("sample_v: count must be at least 1");
  if (!(sigma2 > 0.0)) throw DomainError("sample_v: sigma2 must be positive");
  const double factor = sigma2 / (w.n_predictor - 1.0);
  std::vector<double> out(count);
  mc::for_each_chunk({seed, count, chunk_size, threads},
                     [&](std::size_t begin, std::size_t end, mc::Engine& engine) {
                       std::normal_distribution<double> normal;
                       for (std::size_t i = begin; i < end; ++i) {
                         double q = 0.0;
                         for (double l : w.weights) {
                           const double z = normal(engine);
                           q += l * z * z;
                         }
                         out[i] = factor * q;
                       }
                     });
  return out;
}

}  // namespace dsd
