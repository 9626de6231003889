#pragma once

#include <Eigen/Dense>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace dsd {

/// Fixed precision (structure) matrix K of a Gaussian component together with
/// its declared rank deficiency kappa (the IGMRF order; 0 for proper priors).
struct StructureSpec {
  Eigen::MatrixXd precision;
  int rank_deficiency = 0;
  std::string label;
};

/// Checks symmetry (1e-12 relative) and non-negative dimensions. The
/// positive semi-definiteness and kappa checks need a spectrum and happen in
/// spectral_split().
void validate_structure(const StructureSpec& spec);

/// K = U+ diag(range_eigs) U+^T with [U0 U+] orthonormal.
struct SpectralSplit {
  Eigen::MatrixXd null_basis;
  Eigen::MatrixXd range_basis;
  Eigen::VectorXd range_eigs;
};

enum class DesignKind { identity, selection, basis, covariate_column };

struct DesignMatrix {
  Eigen::MatrixXd values;
  DesignKind kind = DesignKind::basis;
};

void validate_design(const DesignMatrix& z);

/// Non-null eigenvalue weights of the sampling-variance quadratic form of a
/// component nu = Z gamma on R^n, together with n and the number of null
/// directions (n minus the number of weights).
struct QfWeights {
  std::vector<double> weights;
  int n_predictor = 0;
  int zero_count = 0;
};

/// I_n - 11^T / n.
Eigen::MatrixXd centering_matrix(int n);

/// Random-walk precision D^T D of order 1 or 2. Circular walks wrap the
/// differences modulo n and have a single constant null vector.
StructureSpec build_rw(int order, int n, bool circular = false);

/// Besag/ICAR precision D - W from a symmetric 0/1 adjacency matrix;
/// kappa is the number of connected components.
StructureSpec build_icar(const Eigen::MatrixXd& adjacency);

/// Number of connected components of the graph with the given adjacency.
int connected_components(const Eigen::MatrixXd& adjacency);

/// B-spline basis with m functions of the given degree over equally spaced
/// knots: (m - degree) intervals cover [lo, hi] (the range of x unless given)
/// and `degree` further knots extend each side.
DesignMatrix build_bspline_basis(std::span<const double> x, int m, int degree = 3,
                                 std::optional<std::pair<double, double>> range = std::nullopt);

DesignMatrix identity_design(int n);
DesignMatrix covariate_design(std::span<const double> x);
/// Row i selects group groups[i] in 0..m-1.
DesignMatrix selection_design(std::span<const int> groups, int m);

/// Eigen-decomposition of K split at tau = n * eps * lambda_max. Throws
/// DomainError if K is not PSD or the number of null eigenvalues differs
/// from the declared kappa.
SpectralSplit spectral_split(const StructureSpec& spec);

/// Whitened, centered loading L = M Z U+ Lambda+^(-1/2) (n x rank). A
/// constrained draw of the component is nu = sigma * L xi with xi ~ N(0, I)
/// (up to the centering, which the sampling variance ignores).
Eigen::MatrixXd qf_loading(const DesignMatrix& z, const StructureSpec& spec, bool constrained);

/// Constrained draws before centering: Z U+ Lambda+^(-1/2).
Eigen::MatrixXd constrained_effect_map(const DesignMatrix& z, const StructureSpec& spec);

/// Eigenvalues of L^T L above n * eps * max, descending.
QfWeights qf_weights(const DesignMatrix& z, const StructureSpec& spec, bool constrained);

/// Sum of weights over (n - 1): E[V | sigma^2 = 1].
double qf_scale_factor(const QfWeights& w);

/// K multiplied by sum(lambda) / (n - 1) so that E[V | sigma^2] = sigma^2.
StructureSpec scaled_structure(const StructureSpec& spec, const DesignMatrix& z,
                               bool constrained = true);

}  // namespace dsd
