#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "dsd/priors.hpp"
#include "dsd/qf.hpp"
#include "dsd/structure.hpp"

namespace dsd {

struct ElicitationSpec {
  int n = 2;
  double p = 0.5;
  double q = 1.5;
  double pi0 = 0.5;
  double c = 1.0;
  std::size_t mc_draws = 1000000;
  std::uint64_t seed = 20240101;
  std::size_t chunk_size = 65536;
  int threads = 1;
};

void validate(const ElicitationSpec& spec);

struct GaussianLikelihood {
  double sample_variance;
};
struct BinomialLogit {
  double mean;
};
struct BinomialProbit {
  double mean;
};
struct UserSupplied {
  double c;
};
using LikelihoodKind = std::variant<GaussianLikelihood, BinomialLogit, BinomialProbit, UserSupplied>;

/// Variability bound c on the linear-predictor scale.
double pseudo_variance(const LikelihoodKind& kind);

struct ScaleSolution {
  double b = 0.0;
  double std_error = 0.0;
  /// pi0-quantile of V* = V / b and the kernel density estimate there.
  double quantile = 0.0;
  double quantile_density = 0.0;
  std::size_t draws = 0;
  std::vector<std::string> warnings;
};

/// Draws of V* with sigma^2 ~ B2(1, p, q) and V* | sigma^2 ~ Gamma((n-1)/2,
/// rate (n-1)/(2 sigma^2)).
std::vector<double> benchmark_draws(const ElicitationSpec& spec);

/// b = c / q_hat with q_hat the type-7 pi0-quantile of the V* draws.
ScaleSolution solve_scale(const ElicitationSpec& spec);

struct DsdBundle {
  DsdParams params;
  QfWeights weights;
  GammaApprox approx;
  ScaleSolution scale;
  ElicitationSpec elicitation;
  bool constrained = true;
  /// FNV-1a digest of the weight vector bytes, hex.
  std::string weights_digest;
  std::string structure_label;
};

/// qf_weights -> gamma_approx -> solve_scale, with benchmark alpha = beta = (n-1)/2.
DsdBundle build_dsd_prior(const DesignMatrix& z, const StructureSpec& k,
                          const ElicitationSpec& elicitation, bool constrained = true);

/// Assembles the bundle from precomputed weights and scale.
DsdBundle assemble_bundle(const QfWeights& weights, const ScaleSolution& scale,
                          const ElicitationSpec& elicitation);

/// Draws of a component's marginal sampling variance under the Gamma
/// approximation: V = sigma^2 G / beta_tilde with sigma^2 ~ DSD and
/// G ~ Gamma(alpha_tilde, 1). Equal in law to the 2F0 benchmark.
std::vector<double> marginal_variance_sample(const DsdParams& params, std::size_t count,
                                             const SampleOptions& options = {});

struct PredictorComponent {
  std::string label;
  DsdParams params;
  /// Centered whitened loading L (n x r): nu = sigma L xi with xi ~ N(0, I).
  Eigen::MatrixXd loading;
};

struct MomentEstimate {
  double mean = 0.0;
  double std_error = 0.0;
};

struct PredictorCheckReport {
  std::vector<std::string> labels;
  std::vector<MomentEstimate> component_variance;  // E[V_j]
  std::vector<MomentEstimate> cross_terms;         // E[C_jk], j < k, row-major
  std::vector<std::pair<int, int>> cross_pairs;
  MomentEstimate total;               // E[V_eta]
  MomentEstimate benchmark_total;     // sum_j E[benchmark_j], sampled
  double benchmark_total_exact = 0.0; // sum_j b p / (q - 1) * alpha / beta
  double total_z = 0.0;
  double max_cross_z = 0.0;
  bool passed = false;
};

/// Monte Carlo decomposition of the prior mean of the linear-predictor
/// sampling variance. Passes when every cross term and the total-minus-
/// benchmark difference are within `z_limit` standard errors of zero.
PredictorCheckReport predictor_prior_check(const std::vector<PredictorComponent>& components,
                                           std::size_t mc_draws, std::uint64_t seed,
                                           double z_limit = 3.0);

}  // namespace dsd
