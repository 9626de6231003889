#include "dsd/structure.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <sstream>

#include "dsd/errors.hpp"

namespace dsd {
namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();

Eigen::MatrixXd difference_operator(int order, int n, bool circular) {
  const int rows = circular ? n : n - order;
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(rows, n);
  for (int i = 0; i < rows; ++i) {
    if (order == 1) {
      d(i, i) = -1.0;
      d(i, (i + 1) % n) += 1.0;
    } else {
      d(i, i) = 1.0;
      d(i, (i + 1) % n) += -2.0;
      d(i, (i + 2) % n) += 1.0;
    }
  }
  return d;
}

}  // namespace

void validate_structure(const StructureSpec& spec) {
  const auto& k = spec.precision;
  if (k.rows() == 0 || k.rows() != k.cols()) {
    throw DomainError("structure: precision must be a non-empty square matrix");
  }
  if (!k.allFinite()) throw DomainError("structure: precision has non-finite entries");
  if (spec.rank_deficiency < 0 || spec.rank_deficiency > k.rows()) {
    throw DomainError("structure: rank deficiency out of range");
  }
  const double scale = k.cwiseAbs().maxCoeff();
  const double asym = (k - k.transpose()).cwiseAbs().maxCoeff();
  if (asym > 1e-12 * std::max(scale, 1e-300)) {
    std::ostringstream os;
    os << "structure '" << spec.label << "': precision is not symmetric (max |K - K^T| = " << asym
       << ")";
    throw DomainError(os.str());
  }
}

void validate_design(const DesignMatrix& z) {
  if (z.values.rows() < 1 || z.values.cols() < 1) {
    throw DomainError("design: matrix must have at least one row and column");
  }
  if (!z.values.allFinite()) throw DomainError("design: non-finite entries");
  if (z.kind == DesignKind::identity) {
    if (z.values.rows() != z.values.cols() ||
        !z.values.isApprox(Eigen::MatrixXd::Identity(z.values.rows(), z.values.cols()), 0.0)) {
      throw DomainError("design: identity kind requires Z = I");
    }
  }
}

Eigen::MatrixXd centering_matrix(int n) {
  if (n < 2) throw DomainError("centering_matrix: n must be at least 2");
  Eigen::MatrixXd m = Eigen::MatrixXd::Constant(n, n, -1.0 / n);
  m.diagonal().array() += 1.0;
  return m;
}

StructureSpec build_rw(int order, int n, bool circular) {
  if (order != 1 && order != 2) throw DomainError("build_rw: order must be 1 or 2");
  if (n < order + 2) throw DomainError("build_rw: need n >= order + 2");
  const Eigen::MatrixXd d = difference_operator(order, n, circular);
  StructureSpec spec;
  spec.precision = d.transpose() * d;
  spec.rank_deficiency = circular ? 1 : order;
  std::ostringstream label;
  label << (circular ? "crw" : "rw") << order << " n=" << n;
  spec.label = label.str();
  return spec;
}

int connected_components(const Eigen::MatrixXd& adjacency) {
  const auto n = adjacency.rows();
  std::vector<char> seen(static_cast<std::size_t>(n), 0);
  int components = 0;
  for (Eigen::Index start = 0; start < n; ++start) {
    if (seen[start]) continue;
    ++components;
    std::queue<Eigen::Index> frontier;
    frontier.push(start);
    seen[start] = 1;
    while (!frontier.empty()) {
      const auto i = frontier.front();
      frontier.pop();
      for (Eigen::Index j = 0; j < n; ++j) {
        if (adjacency(i, j) != 0.0 && !seen[j]) {
          seen[j] = 1;
          frontier.push(j);
        }
      }
    }
  }
  return components;
}

StructureSpec build_icar(const Eigen::MatrixXd& adjacency) {
  const auto n = adjacency.rows();
  if (n < 1 || adjacency.cols() != n) throw DomainError("build_icar: adjacency must be square");
  for (Eigen::Index i = 0; i < n; ++i) {
    if (adjacency(i, i) != 0.0) throw DomainError("build_icar: adjacency has a self-loop");
    for (Eigen::Index j = 0; j < n; ++j) {
      const double a = adjacency(i, j);
      if (a != 0.0 && a != 1.0) throw DomainError("build_icar: adjacency entries must be 0 or 1");
      if (a != adjacency(j, i)) throw DomainError("build_icar: adjacency is not symmetric");
    }
  }
  StructureSpec spec;
  spec.precision = -adjacency;
  spec.precision.diagonal() = adjacency.rowwise().sum();
  spec.rank_deficiency = connected_components(adjacency);
  spec.label = "icar n=" + std::to_string(n);
  return spec;
}

DesignMatrix build_bspline_basis(std::span<const double> x, int m, int degree,
                                 std::optional<std::pair<double, double>> range) {
  if (degree < 1) throw DomainError("build_bspline_basis: degree must be at least 1");
  if (m < degree + 2) throw DomainError("build_bspline_basis: need m >= degree + 2");
  if (x.empty()) throw DomainError("build_bspline_basis: x is empty");
  for (double xi : x) {
    if (!std::isfinite(xi)) throw DomainError("build_bspline_basis: x has non-finite values");
  }
  double lo;
  double hi;
  if (range) {
    std::tie(lo, hi) = *range;
  } else {
    const auto [mn, mx] = std::minmax_element(x.begin(), x.end());
    lo = *mn;
    hi = *mx;
  }
  if (!(hi > lo)) {
    throw DomainError("build_bspline_basis: x has zero range; pass explicit bounds");
  }
  const int intervals = m - degree;
  const double dx = (hi - lo) / intervals;
  const int knot_count = m + degree + 1;
  std::vector<double> t(static_cast<std::size_t>(knot_count));
  for (int k = 0; k < knot_count; ++k) t[k] = lo + (k - degree) * dx;
  // Interior boundaries land exactly on lo and hi.
  t[degree] = lo;
  t[m] = hi;

  DesignMatrix z;
  z.kind = DesignKind::basis;
  z.values = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(x.size()), m);
  std::vector<double> basis(degree + 1);
  std::vector<double> left(degree + 1);
  std::vector<double> right(degree + 1);
  for (std::size_t row = 0; row < x.size(); ++row) {
    const double xv = x[row];
    if (xv < lo || xv > hi) throw DomainError("build_bspline_basis: x outside the knot range");
    int span = degree + static_cast<int>(std::floor((xv - lo) / dx));
    span = std::clamp(span, degree, m);
    while (span > degree && xv < t[span]) --span;
    while (span < m && xv >= t[span + 1]) ++span;
    // Cox-de Boor triangle for the degree+1 non-zero functions on the span.
    basis[0] = 1.0;
    for (int r = 1; r <= degree; ++r) {
      left[r] = xv - t[span + 1 - r];
      right[r] = t[span + r] - xv;
      double saved = 0.0;
      for (int k = 0; k < r; ++k) {
        const double temp = basis[k] / (right[k + 1] + left[r - k]);
        basis[k] = saved + right[k + 1] * temp;
        saved = left[r - k] * temp;
      }
      basis[r] = saved;
    }
    for (int k = 0; k <= degree; ++k) {
      const int col = span - degree + k;
      if (col >= 0 && col < m) z.values(static_cast<Eigen::Index>(row), col) = basis[k];
    }
  }
  return z;
}

DesignMatrix identity_design(int n) {
  if (n < 1) throw DomainError("identity_design: n must be positive");
  return {Eigen::MatrixXd::Identity(n, n), DesignKind::identity};
}

DesignMatrix covariate_design(std::span<const double> x) {
  if (x.empty()) throw DomainError("covariate_design: x is empty");
  DesignMatrix z;
  z.kind = DesignKind::covariate_column;
  z.values.resize(static_cast<Eigen::Index>(x.size()), 1);
  for (std::size_t i = 0; i < x.size(); ++i) z.values(static_cast<Eigen::Index>(i), 0) = x[i];
  return z;
}

DesignMatrix selection_design(std::span<const int> groups, int m) {
  if (groups.empty() || m < 1) throw DomainError("selection_design: empty input");
  DesignMatrix z;
  z.kind = DesignKind::selection;
  z.values = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(groups.size()), m);
  for (std::size_t i = 0; i < groups.size(); ++i) {
    if (groups[i] < 0 || groups[i] >= m) throw DomainError("selection_design: group out of range");
    z.values(static_cast<Eigen::Index>(i), groups[i]) = 1.0;
  }
  return z;
}

SpectralSplit spectral_split(const StructureSpec& spec) {
  validate_structure(spec);
  const auto n = spec.precision.rows();
  const Eigen::MatrixXd sym = 0.5 * (spec.precision + spec.precision.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(sym);
  if (solver.info() != Eigen::Success) {
    throw NumericalError("spectral_split: eigensolver failed", spec.label);
  }
  const Eigen::VectorXd& eig = solver.eigenvalues();  // ascending
  const double lambda_max = std::max(eig(n - 1), 0.0);
  if (eig(0) < -1e-10 * lambda_max) {
    std::ostringstream os;
    os << "structure '" << spec.label << "' is not positive semi-definite (min eigenvalue "
       << eig(0) << ", max " << lambda_max << ")";
    throw DomainError(os.str());
  }
  const double tau = static_cast<double>(n) * kEps * lambda_max;
  Eigen::Index null_count = 0;
  while (null_count < n && eig(null_count) <= tau) ++null_count;
  if (null_count != spec.rank_deficiency) {
    std::ostringstream os;
    os << "structure '" << spec.label << "': detected " << null_count
       << " null eigenvalues but declared rank deficiency is " << spec.rank_deficiency;
    throw DomainError(os.str());
  }
  SpectralSplit split;
  split.null_basis = solver.eigenvectors().leftCols(null_count);
  split.range_basis = solver.eigenvectors().rightCols(n - null_count);
  split.range_eigs = eig.tail(n - null_count);
  return split;
}

Eigen::MatrixXd constrained_effect_map(const DesignMatrix& z, const StructureSpec& spec) {
  validate_design(z);
  if (z.values.cols() != spec.precision.rows()) {
    std::ostringstream os;
    os << "design has " << z.values.cols() << " columns but structure is "
       << spec.precision.rows() << "x" << spec.precision.cols();
    throw DomainError(os.str());
  }
  const SpectralSplit split = spectral_split(spec);
  const Eigen::VectorXd inv_sqrt = split.range_eigs.array().rsqrt().matrix();
  return z.values * split.range_basis * inv_sqrt.asDiagonal();
}

Eigen::MatrixXd qf_loading(const DesignMatrix& z, const StructureSpec& spec, bool constrained) {
  if (z.values.rows() < 2) throw DomainError("qf_weights: need n >= 2 predictor rows");
  if (spec.rank_deficiency > 0 && !constrained) {
    throw DomainError(
        "qf_weights: an unconstrained intrinsic structure has no finite sampling variance; "
        "use the constrained form");
  }
  Eigen::MatrixXd loading = constrained_effect_map(z, spec);
  // Column centering is M * loading.
  loading.rowwise() -= loading.colwise().mean();
  return loading;
}

QfWeights qf_weights(const DesignMatrix& z, const StructureSpec& spec, bool constrained) {
  const Eigen::MatrixXd loading = qf_loading(z, spec, constrained);
  const Eigen::MatrixXd gram = loading.transpose() * loading;
  QfWeights out;
  out.n_predictor = static_cast<int>(z.values.rows());
  if (gram.rows() > 0) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(gram, Eigen::EigenvaluesOnly);
    if (solver.info() != Eigen::Success) throw NumericalError("qf_weights: eigensolver failed");
    const Eigen::VectorXd& ev = solver.eigenvalues();
    const double top = ev(ev.size() - 1);
    const double tol =
        static_cast<double>(std::max<Eigen::Index>(loading.rows(), loading.cols())) * kEps * top;
    for (Eigen::Index i = ev.size(); i-- > 0;) {
      if (ev(i) > tol) out.weights.push_back(ev(i));
    }
  }
  out.zero_count = out.n_predictor - static_cast<int>(out.weights.size());
  return out;
}

double qf_scale_factor(const QfWeights& w) {
  if (w.n_predictor < 2) throw DomainError("qf_scale_factor: need n >= 2");
  double sum = 0.0;
  for (double l : w.weights) sum += l;
  return sum / (w.n_predictor - 1);
}

StructureSpec scaled_structure(const StructureSpec& spec, const DesignMatrix& z, bool constrained) {
  const QfWeights w = qf_weights(z, spec, constrained);
  if (w.weights.empty()) throw DomainError("scaled_structure: component has no variability");
  StructureSpec out = spec;
  out.precision *= qf_scale_factor(w);
  out.label = spec.label + " (scaled)";
  return out;
}

}  // namespace dsd
