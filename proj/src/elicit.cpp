#include "dsd/elicit.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "dsd/digest.hpp"
#include "dsd/errors.hpp"
#include "dsd/monte_carlo.hpp"
#include "dsd/specfun.hpp"

namespace dsd {

void validate(const ElicitationSpec& s) {
  if (s.n < 2) throw DomainError("elicitation: n must be at least 2");
  if (!(s.p > 0.0) || !(s.q > 0.0) || !std::isfinite(s.p) || !std::isfinite(s.q)) {
    throw DomainError("elicitation: p and q must be positive");
  }
  if (!(s.pi0 > 0.0 && s.pi0 < 1.0)) throw DomainError("elicitation: pi0 must lie in (0, 1)");
  if (!(s.c > 0.0) || !std::isfinite(s.c)) throw DomainError("elicitation: c must be positive");
  if (s.mc_draws < 2) throw DomainError("elicitation: mc_draws must be at least 2");
  if (s.chunk_size == 0) throw DomainError("elicitation: chunk_size must be positive");
}

double pseudo_variance(const LikelihoodKind& kind) {
  struct Visitor {
    double operator()(const GaussianLikelihood& g) const {
      if (!(g.sample_variance > 0.0) || !std::isfinite(g.sample_variance)) {
        throw DomainError("pseudo_variance: sample variance must be positive");
      }
      return g.sample_variance;
    }
    static void check_mean(double m) {
      if (!(m > 0.0 && m < 1.0)) throw DomainError("pseudo_variance: mean must lie in (0, 1)");
    }
    double operator()(const BinomialLogit& g) const {
      check_mean(g.mean);
      return 1.0 / (g.mean * (1.0 - g.mean));
    }
    double operator()(const BinomialProbit& g) const {
      check_mean(g.mean);
      const double phi = specfun::normal_pdf(specfun::normal_quantile(g.mean));
      return g.mean * (1.0 - g.mean) / (phi * phi);
    }
    double operator()(const UserSupplied& g) const {
      if (!(g.c > 0.0) || !std::isfinite(g.c)) throw DomainError("pseudo_variance: c must be positive");
      return g.c;
    }
  };
  return std::visit(Visitor{}, kind);
}

std::vector<double> benchmark_draws(const ElicitationSpec& s) {
  validate(s);
  const double alpha = 0.5 * (s.n - 1);
  return mc::generate({s.seed, s.mc_draws, s.chunk_size, s.threads}, [&](mc::Engine& e) {
    const double g1 = mc::gamma_draw(e, s.p);
    const double g2 = mc::gamma_draw(e, s.q);
    return (g1 / g2) * (mc::gamma_draw(e, alpha) / alpha);
  });
}

ScaleSolution solve_scale(const ElicitationSpec& s) {
  std::vector<double> draws = benchmark_draws(s);
  std::sort(draws.begin(), draws.end());
  ScaleSolution out;
  out.draws = draws.size();
  out.quantile = mc::quantile_sorted(draws, s.pi0);
  if (!(out.quantile > 0.0) || !std::isfinite(out.quantile)) {
    std::ostringstream os;
    os << "quantile=" << out.quantile << " draws=" << draws.size() << " pi0=" << s.pi0;
    throw NumericalError("solve_scale: degenerate Monte Carlo quantile", os.str());
  }
  out.b = s.c / out.quantile;
  out.quantile_density = mc::kde_density(draws, out.quantile);
  if (out.quantile_density > 0.0) {
    const double se_q =
        std::sqrt(s.pi0 * (1.0 - s.pi0) / static_cast<double>(draws.size())) / out.quantile_density;
    out.std_error = out.b * se_q / out.quantile;
  } else {
    out.std_error = std::numeric_limits<double>::infinity();
    out.warnings.push_back("kernel density at the quantile is zero; standard error unavailable");
  }
  if (s.mc_draws < 10000) {
    out.warnings.push_back("mc_draws below 10000: Monte Carlo error in b may be large");
  }
  return out;
}

DsdBundle assemble_bundle(const QfWeights& weights, const ScaleSolution& scale,
                          const ElicitationSpec& e) {
  validate(e);
  if (weights.n_predictor != e.n) {
    std::ostringstream os;
    os << "elicitation n = " << e.n << " differs from the predictor length " << weights.n_predictor;
    throw DomainError(os.str());
  }
  DsdBundle out;
  out.weights = weights;
  out.approx = gamma_approx(weights);
  out.scale = scale;
  out.elicitation = e;
  const double benchmark = 0.5 * (e.n - 1);
  out.params = {benchmark, benchmark, out.approx.alpha_tilde, out.approx.beta_tilde, scale.b, e.p, e.q};
  validate(out.params);
  out.weights_digest = hex64(fnv1a64(
      {reinterpret_cast<const unsigned char*>(weights.weights.data()),
       weights.weights.size() * sizeof(double)}));
  return out;
}

DsdBundle build_dsd_prior(const DesignMatrix& z, const StructureSpec& k, const ElicitationSpec& e,
                          bool constrained) {
  validate(e);
  if (z.values.rows() != e.n) {
    std::ostringstream os;
    os << "elicitation n = " << e.n << " but the design has " << z.values.rows() << " rows";
    throw DomainError(os.str());
  }
  const QfWeights weights = qf_weights(z, k, constrained);
  const GammaApprox approx = gamma_approx(weights);
  if (e.p > approx.alpha_tilde) throw ExistenceError(e.p, approx.alpha_tilde);
  DsdBundle out = assemble_bundle(weights, solve_scale(e), e);
  out.constrained = constrained;
  out.structure_label = k.label;
  return out;
}

std::vector<double> marginal_variance_sample(const DsdParams& t, std::size_t count,
                                             const SampleOptions& opt) {
  validate(t);
  std::vector<double> v = DsdDistribution(t).sample(count, opt);
  const std::vector<double> g =
      mc::generate({mc::splitmix64(opt.seed ^ 0x9e3779b97f4a7c15ULL), count, opt.chunk_size, opt.threads},
                   [&](mc::Engine& e) { return mc::gamma_draw(e, t.alpha_tilde); });
  for (std::size_t i = 0; i < count; ++i) v[i] *= g[i] / t.beta_tilde;
  return v;
}

PredictorCheckReport predictor_prior_check(const std::vector<PredictorComponent>& components,
                                           std::size_t mc_draws, std::uint64_t seed,
                                           double z_limit) {
  if (components.empty()) throw DomainError("predictor_prior_check: no components");
  if (mc_draws < 2) throw DomainError("predictor_prior_check: mc_draws must be at least 2");
  const Eigen::Index n = components.front().loading.rows();
  if (n < 2) throw DomainError("predictor_prior_check: loadings need at least 2 rows");
  for (const auto& c : components) {
    validate(c.params);
    if (c.params.q <= 1.0) {
      throw DomainError("predictor_prior_check: q <= 1 gives an infinite prior mean (component '" +
                        c.label + "')");
    }
    if (c.loading.rows() != n) throw DomainError("predictor_prior_check: components differ in n");
  }
  const std::size_t J = components.size();
  const double n1 = static_cast<double>(n - 1);

  std::vector<std::vector<double>> sigma2(J);
  std::vector<double> bench_total(mc_draws, 0.0);
  for (std::size_t j = 0; j < J; ++j) {
    const std::uint64_t sj = mc::splitmix64(seed + 2 * j + 1);
    sigma2[j] = DsdDistribution(components[j].params).sample(mc_draws, {sj});
    const auto bench = twoF0_sample(components[j].params.benchmark(), mc_draws,
                                    {mc::splitmix64(seed + 2 * j + 2)});
    for (std::size_t i = 0; i < mc_draws; ++i) bench_total[i] += bench[i];
  }

  const std::size_t pairs = J * (J - 1) / 2;
  std::vector<std::vector<double>> var_draws(J, std::vector<double>(mc_draws));
  std::vector<std::vector<double>> cross_draws(pairs, std::vector<double>(mc_draws));
  std::vector<double> total_draws(mc_draws);
  mc::for_each_chunk({mc::splitmix64(seed), mc_draws, 65536, 1},
                     [&](std::size_t begin, std::size_t end, mc::Engine& engine) {
                       std::normal_distribution<double> normal;
                       std::vector<Eigen::VectorXd> nu(J);
                       for (std::size_t i = begin; i < end; ++i) {
                         Eigen::VectorXd sum = Eigen::VectorXd::Zero(n);
                         for (std::size_t j = 0; j < J; ++j) {
                           const auto& l = components[j].loading;
                           Eigen::VectorXd xi(l.cols());
                           for (Eigen::Index k = 0; k < xi.size(); ++k) xi(k) = normal(engine);
                           nu[j] = std::sqrt(sigma2[j][i]) * (l * xi);
                           sum += nu[j];
                           var_draws[j][i] = nu[j].squaredNorm() / n1;
                         }
                         std::size_t pair = 0;
                         for (std::size_t j = 0; j < J; ++j) {
                           for (std::size_t k = j + 1; k < J; ++k) {
                             cross_draws[pair++][i] = nu[j].dot(nu[k]) / n1;
                           }
                         }
                         total_draws[i] = sum.squaredNorm() / n1;
                       }
                     });

  PredictorCheckReport r;
  for (std::size_t j = 0; j < J; ++j) {
    r.labels.push_back(components[j].label);
    const auto s = mc::summarize(var_draws[j]);
    r.component_variance.push_back({s.mean, s.std_error});
    r.benchmark_total_exact += twoF0_mean(components[j].params.benchmark());
  }
  std::size_t pair = 0;
  for (std::size_t j = 0; j < J; ++j) {
    for (std::size_t k = j + 1; k < J; ++k) {
      const auto s = mc::summarize(cross_draws[pair++]);
      r.cross_terms.push_back({s.mean, s.std_error});
      r.cross_pairs.emplace_back(static_cast<int>(j), static_cast<int>(k));
      r.max_cross_z = std::max(r.max_cross_z, std::abs(s.mean) / s.std_error);
    }
  }
  const auto t = mc::summarize(total_draws);
  const auto b = mc::summarize(bench_total);
  r.total = {t.mean, t.std_error};
  r.benchmark_total = {b.mean, b.std_error};
  r.total_z = (t.mean - b.mean) / std::hypot(t.std_error, b.std_error);
  r.passed = std::abs(r.total_z) <= z_limit && r.max_cross_z <= z_limit;
  return r;
}

}  // namespace dsd
