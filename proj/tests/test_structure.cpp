#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <random>
#include <vector>

#include "dsd/errors.hpp"
#include "dsd/structure.hpp"
#include "oracles/oracles.hpp"
#include "support.hpp"

using namespace dsd;

TEST(Centering, SmallAndAlgebraicIdentities) {
  const Eigen::MatrixXd m2 = centering_matrix(2);
  EXPECT_DOUBLE_EQ(m2(0, 0), 0.5);
  EXPECT_DOUBLE_EQ(m2(0, 1), -0.5);
  EXPECT_DOUBLE_EQ(m2(1, 0), -0.5);
  EXPECT_DOUBLE_EQ(m2(1, 1), 0.5);

  EXPECT_LE((centering_matrix(10) * Eigen::VectorXd::Ones(10)).cwiseAbs().maxCoeff(), 1e-15);

  const Eigen::MatrixXd m7 = centering_matrix(7);
  EXPECT_LE((m7 * m7 - m7).cwiseAbs().maxCoeff(), 1e-14);
  EXPECT_LE((m7 - m7.transpose()).cwiseAbs().maxCoeff(), 0.0);
  EXPECT_NEAR(m7.trace(), 6.0, 1e-14);
  EXPECT_THROW(centering_matrix(1), DomainError);
}

TEST(RandomWalk, FirstOrderByHand) {
  const StructureSpec k = build_rw(1, 3);
  Eigen::MatrixXd want(3, 3);
  want << 1, -1, 0, -1, 2, -1, 0, -1, 1;
  EXPECT_EQ(k.precision, want);
  EXPECT_EQ(k.rank_deficiency, 1);
}

TEST(RandomWalk, SecondOrderAnnihilatesLinearTrend) {
  const StructureSpec k = build_rw(2, 5);
  EXPECT_EQ(k.rank_deficiency, 2);
  Eigen::VectorXd trend(5), ones = Eigen::VectorXd::Ones(5);
  trend << 0, 1, 2, 3, 4;
  EXPECT_LE((k.precision * trend).cwiseAbs().maxCoeff(), 1e-14);
  EXPECT_LE((k.precision * ones).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(RandomWalk, CircularSecondOrderHasOneNullDirection) {
  const StructureSpec k = build_rw(2, 366, true);
  EXPECT_EQ(k.rank_deficiency, 1);
  // Each row of the circulant is (1, -4, 6, -4, 1).
  EXPECT_DOUBLE_EQ(k.precision(0, 0), 6.0);
  EXPECT_DOUBLE_EQ(k.precision(0, 1), -4.0);
  EXPECT_DOUBLE_EQ(k.precision(0, 365), -4.0);
  EXPECT_DOUBLE_EQ(k.precision(0, 364), 1.0);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(k.precision, Eigen::EigenvaluesOnly);
  const double top = es.eigenvalues().maxCoeff();
  const auto below = (es.eigenvalues().array() < 1e-10 * top).count();
  EXPECT_EQ(below, 1);
}

TEST(RandomWalk, RejectsBadInput) {
  EXPECT_THROW(build_rw(3, 10), DomainError);
  EXPECT_THROW(build_rw(2, 3), DomainError);
}

TEST(Icar, PathGraphIsFirstOrderWalk) {
  Eigen::MatrixXd adj(3, 3);
  adj << 0, 1, 0, 1, 0, 1, 0, 1, 0;
  const StructureSpec k = build_icar(adj);
  EXPECT_EQ(k.precision, build_rw(1, 3).precision);
  EXPECT_EQ(k.rank_deficiency, 1);
}

TEST(Icar, TwoDisjointEdges) {
  Eigen::MatrixXd adj = Eigen::MatrixXd::Zero(4, 4);
  adj(0, 1) = adj(1, 0) = 1;
  adj(2, 3) = adj(3, 2) = 1;
  EXPECT_EQ(build_icar(adj).rank_deficiency, 2);
  EXPECT_NO_THROW(spectral_split(build_icar(adj)));
}

TEST(Icar, RandomGraphsMatchSearchOracle) {
  std::mt19937_64 rng(2024);
  const Eigen::MatrixXd connected = fixture::random_connected_graph(20, 15, rng);
  const StructureSpec k = build_icar(connected);
  EXPECT_EQ(oracle::dfs_components(connected), 1);
  EXPECT_EQ(k.rank_deficiency, 1);
  EXPECT_LE((k.precision * Eigen::VectorXd::Ones(20)).cwiseAbs().maxCoeff(), 1e-14);

  // Sparse random graphs with several components.
  for (int trial = 0; trial < 20; ++trial) {
    Eigen::MatrixXd adj = Eigen::MatrixXd::Zero(30, 30);
    std::uniform_int_distribution<int> pick(0, 29);
    for (int e = 0; e < 18; ++e) {
      const int u = pick(rng), v = pick(rng);
      if (u != v) adj(u, v) = adj(v, u) = 1.0;
    }
    const StructureSpec g = build_icar(adj);
    EXPECT_EQ(g.rank_deficiency, oracle::dfs_components(adj));
    EXPECT_NO_THROW(spectral_split(g));
  }
}

TEST(Icar, RejectsMalformedAdjacency) {
  Eigen::MatrixXd asym = Eigen::MatrixXd::Zero(3, 3);
  asym(0, 1) = 1;
  EXPECT_THROW(build_icar(asym), DomainError);
  Eigen::MatrixXd loop = Eigen::MatrixXd::Zero(3, 3);
  loop(1, 1) = 1;
  EXPECT_THROW(build_icar(loop), DomainError);
}

TEST(BSpline, PartitionOfUnity) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-2.0, 3.0);
  std::vector<double> x(200);
  for (double& v : x) v = u(rng);
  for (int degree : {1, 2, 3})
    for (int m : {degree + 2, 7, 20}) {
      const DesignMatrix z = build_bspline_basis(x, m, degree);
      EXPECT_EQ(z.values.cols(), m);
      EXPECT_LE((z.values.rowwise().sum().array() - 1.0).abs().maxCoeff(), 1e-12);
      EXPECT_GE(z.values.minCoeff(), 0.0);
    }
}

TEST(BSpline, HatFunctionAtKnot) {
  const std::vector<double> x{0.5};
  const DesignMatrix z = build_bspline_basis(x, 3, 1, std::pair{0.0, 1.0});
  ASSERT_EQ(z.values.rows(), 1);
  EXPECT_DOUBLE_EQ(z.values(0, 0), 0.0);
  EXPECT_DOUBLE_EQ(z.values(0, 1), 1.0);
  EXPECT_DOUBLE_EQ(z.values(0, 2), 0.0);
}

TEST(BSpline, MatchesRecursiveDefinition) {
  for (int m : {5, 20})
    for (int degree : {2, 3}) {
      const auto x = fixture::linspace(-1.0, 1.0, 50);
      const DesignMatrix z = build_bspline_basis(x, m, degree);
      const auto knots = oracle::equispaced_knots(-1.0, 1.0, m, degree);
      double worst = 0.0;
      for (int r = 0; r < 50; ++r)
        for (int j = 0; j < m; ++j) {
          // The half-open recursion leaves x = hi uncovered; the basis there
          // is the left limit, which the closed last interval gives.
          const double xr = r == 49 ? std::nextafter(1.0, 0.0) : x[r];
          worst = std::max(worst, std::abs(z.values(r, j) - oracle::cox_de_boor(knots, j, degree, xr)));
        }
      EXPECT_LE(worst, 1e-12) << "m=" << m << " degree=" << degree;
    }
}

TEST(BSpline, RejectsBadInput) {
  const std::vector<double> x{0.0, 1.0};
  EXPECT_THROW(build_bspline_basis(x, 4, 3), DomainError);
  EXPECT_THROW(build_bspline_basis(x, 5, 0), DomainError);
  EXPECT_THROW(build_bspline_basis(x, 5, 3, std::pair{0.2, 1.0}), DomainError);
  const std::vector<double> flat{0.3, 0.3};
  EXPECT_THROW(build_bspline_basis(flat, 5, 3), DomainError);
}

TEST(Design, Validation) {
  DesignMatrix bad{Eigen::MatrixXd::Identity(3, 3) * 2.0, DesignKind::identity};
  EXPECT_THROW(validate_design(bad), DomainError);
  EXPECT_NO_THROW(validate_design(identity_design(4)));
  const std::vector<int> groups{0, 2, 1, 2};
  const DesignMatrix s = selection_design(groups, 3);
  EXPECT_EQ(s.values.rowwise().sum(), Eigen::VectorXd::Ones(4));
  EXPECT_EQ(s.values(1, 2), 1.0);
  const std::vector<int> out_of_range{0, 3};
  EXPECT_THROW(selection_design(out_of_range, 3), DomainError);
}

namespace {

void expect_valid_split(const StructureSpec& k) {
  const SpectralSplit s = spectral_split(k);
  const int n = static_cast<int>(k.precision.rows());
  Eigen::MatrixXd u(n, n);
  u << s.null_basis, s.range_basis;
  EXPECT_LE((u.transpose() * u - Eigen::MatrixXd::Identity(n, n)).cwiseAbs().maxCoeff(), 1e-10);
  const Eigen::MatrixXd rebuilt = s.range_basis * s.range_eigs.asDiagonal() * s.range_basis.transpose();
  EXPECT_LE((rebuilt - k.precision).norm() / k.precision.norm(), 1e-9);
  EXPECT_EQ(s.null_basis.cols(), k.rank_deficiency);
  EXPECT_GT(s.range_eigs.minCoeff(), 0.0);
}

}  // namespace

TEST(SpectralSplit, Identity) {
  const SpectralSplit s = spectral_split({Eigen::MatrixXd::Identity(6, 6), 0, "I"});
  EXPECT_EQ(s.null_basis.cols(), 0);
  EXPECT_LE((s.range_eigs.array() - 1.0).abs().maxCoeff(), 1e-15);
  EXPECT_LE((s.range_basis.transpose() * s.range_basis - Eigen::MatrixXd::Identity(6, 6))
                .cwiseAbs()
                .maxCoeff(),
            1e-14);
}

TEST(SpectralSplit, FirstOrderNullSpaceIsConstant) {
  const SpectralSplit s = spectral_split(build_rw(1, 10));
  ASSERT_EQ(s.null_basis.cols(), 1);
  const Eigen::VectorXd u0 = s.null_basis.col(0) * (s.null_basis(0, 0) > 0 ? 1.0 : -1.0);
  EXPECT_LE((u0.array() - 1.0 / std::sqrt(10.0)).abs().maxCoeff(), 1e-12);
}

TEST(SpectralSplit, SecondOrderNullSpaceIsLinear) {
  const int n = 30;
  const SpectralSplit s = spectral_split(build_rw(2, n));
  Eigen::MatrixXd poly(n, 2);
  for (int i = 0; i < n; ++i) poly.row(i) << 1.0, i;
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(poly);
  const Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(n, 2);
  const Eigen::MatrixXd residual = s.null_basis - q * (q.transpose() * s.null_basis);
  EXPECT_LE(residual.norm(), 1e-9);
}

TEST(SpectralSplit, InvariantsAcrossStructures) {
  expect_valid_split(build_rw(1, 12));
  expect_valid_split(build_rw(2, 40));
  expect_valid_split(build_rw(2, 366, true));
  expect_valid_split(build_rw(1, 25, true));
  std::mt19937_64 rng(9);
  expect_valid_split(build_icar(fixture::random_connected_graph(40, 30, rng)));
}

TEST(SpectralSplit, DetectsMisdeclaredOrIndefiniteStructure) {
  StructureSpec wrong = build_rw(2, 10);
  wrong.rank_deficiency = 1;
  EXPECT_THROW(spectral_split(wrong), DomainError);
  Eigen::MatrixXd indef(2, 2);
  indef << 1, 2, 2, 1;
  EXPECT_THROW(spectral_split({indef, 0, "indefinite"}), DomainError);
  Eigen::MatrixXd asym(2, 2);
  asym << 1, 0.5, 0.4, 1;
  EXPECT_THROW(spectral_split({asym, 0, "asymmetric"}), DomainError);
}

TEST(QfWeights, IidComponent) {
  const auto c = fixture::iid(15);
  const QfWeights w = qf_weights(c.z, c.k, true);
  ASSERT_EQ(w.weights.size(), 14u);
  for (double l : w.weights) EXPECT_NEAR(l, 1.0, 1e-13);
  EXPECT_EQ(w.n_predictor, 15);
  EXPECT_GE(w.zero_count, 1);
}

TEST(QfWeights, CovariateColumnClosedForm) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> g(2.0, 3.0);
  std::vector<double> x(37);
  for (double& v : x) v = g(rng);
  const double mean = std::accumulate(x.begin(), x.end(), 0.0) / x.size();
  double ss = 0.0;
  for (double v : x) ss += (v - mean) * (v - mean);
  const QfWeights w =
      qf_weights(covariate_design(x), {Eigen::MatrixXd::Identity(1, 1), 0, "fixed"}, false);
  ASSERT_EQ(w.weights.size(), 1u);
  EXPECT_LE(std::abs(w.weights[0] - ss) / ss, 1e-12);
}

TEST(QfWeights, PSplineMatchesPseudoInverseOracle) {
  for (int m : {5, 20}) {
    const auto c = fixture::pspline(m);
    const QfWeights w = qf_weights(c.z, c.k, true);
    EXPECT_EQ(w.weights.size(), static_cast<std::size_t>(m - 2));
    const auto want = oracle::pinv_weights(c.z.values, c.k.precision);
    EXPECT_LE(fixture::max_rel_diff(w.weights, want), 1e-8) << "m=" << m;
  }
}

TEST(QfWeights, IcarSelectionMatchesPseudoInverseOracle) {
  std::mt19937_64 rng(77);
  const Eigen::MatrixXd adj = fixture::random_connected_graph(12, 8, rng);
  std::vector<int> groups(60);
  for (int i = 0; i < 60; ++i) groups[i] = i % 12;
  const DesignMatrix z = selection_design(groups, 12);
  const StructureSpec k = build_icar(adj);
  const QfWeights w = qf_weights(z, k, true);
  EXPECT_LE(fixture::max_rel_diff(w.weights, oracle::pinv_weights(z.values, k.precision)), 1e-8);
}

TEST(QfWeights, RejectsUnconstrainedIntrinsicAndTinyN) {
  const auto c = fixture::pspline(5);
  EXPECT_THROW(qf_weights(c.z, c.k, false), DomainError);
  const DesignMatrix one_row{Eigen::MatrixXd::Ones(1, 3), DesignKind::basis};
  EXPECT_THROW(qf_weights(one_row, {Eigen::MatrixXd::Identity(3, 3), 0, "I"}, false), DomainError);
}

TEST(QfWeights, InvariantUnderOrthogonalReparameterization) {
  std::mt19937_64 rng(17);
  for (int m : {5, 12}) {
    const auto c = fixture::pspline(m);
    const Eigen::MatrixXd q = fixture::random_orthogonal(m, rng);
    const DesignMatrix zq{c.z.values * q, DesignKind::basis};
    Eigen::MatrixXd kq = q.transpose() * c.k.precision * q;
    kq = 0.5 * (kq + kq.transpose());
    const StructureSpec rotated{kq, 2, "rotated"};
    EXPECT_LE(fixture::max_rel_diff(qf_weights(zq, rotated, true).weights,
                                    qf_weights(c.z, c.k, true).weights),
              1e-9);
  }
}

TEST(Constraint, EffectsOrthogonalToNullSpace) {
  std::mt19937_64 rng(8);
  std::normal_distribution<double> g;
  const StructureSpec crw = build_rw(2, 100, true);
  const StructureSpec rw2 = build_rw(2, 20);
  for (const StructureSpec* k : {&crw, &rw2}) {
    const int n = static_cast<int>(k->precision.rows());
    const SpectralSplit s = spectral_split(*k);
    const Eigen::MatrixXd map = constrained_effect_map(identity_design(n), *k);
    for (int draw = 0; draw < 10; ++draw) {
      Eigen::VectorXd xi(map.cols());
      for (int i = 0; i < xi.size(); ++i) xi[i] = g(rng);
      const Eigen::VectorXd nu = map * xi;
      EXPECT_LE((s.null_basis.transpose() * nu).cwiseAbs().maxCoeff(), 1e-9 * nu.norm());
    }
  }
}

TEST(QfMonteCarlo, MomentIdentities) {
  const auto c = fixture::pspline(8);
  const Eigen::MatrixXd l = qf_loading(c.z, c.k, true);
  const QfWeights w = qf_weights(c.z, c.k, true);
  const int n = w.n_predictor;
  double s1 = 0.0, s2 = 0.0;
  for (double v : w.weights) {
    s1 += v;
    s2 += v * v;
  }
  const double want_mean = s1 / (n - 1);
  const double want_var = 2.0 * s2 / ((n - 1.0) * (n - 1.0));

  std::mt19937_64 rng(99);
  std::normal_distribution<double> g;
  const int draws = 40000;
  std::vector<double> v(draws);
  for (int d = 0; d < draws; ++d) {
    Eigen::VectorXd xi(l.cols());
    for (int i = 0; i < xi.size(); ++i) xi[i] = g(rng);
    const Eigen::VectorXd nu = l * xi;
    v[d] = (nu.array() - nu.mean()).square().sum() / (n - 1);
  }
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= draws;
  double m2 = 0.0, m4 = 0.0;
  for (double x : v) {
    const double d = x - mean;
    m2 += d * d;
    m4 += d * d * d * d;
  }
  m2 /= draws - 1;
  m4 /= draws;
  EXPECT_LE(std::abs(mean - want_mean), 3.0 * std::sqrt(m2 / draws));
  EXPECT_LE(std::abs(m2 - want_var), 3.0 * std::sqrt((m4 - m2 * m2) / draws));
}

TEST(ScaledStructure, UnitMeanSamplingVariance) {
  const auto iid = fixture::iid(10);
  EXPECT_LE((scaled_structure(iid.k, iid.z).precision - iid.k.precision).cwiseAbs().maxCoeff(),
            1e-14);

  for (int m : {5, 20}) {
    const auto c = fixture::pspline(m);
    const auto oracle_w = oracle::pinv_weights(c.z.values, c.k.precision);
    const double factor = std::accumulate(oracle_w.begin(), oracle_w.end(), 0.0) / 49.0;
    const StructureSpec scaled = scaled_structure(c.k, c.z);
    EXPECT_LE((scaled.precision - factor * c.k.precision).norm() / (factor * c.k.precision.norm()),
              1e-9);
    EXPECT_NEAR(qf_scale_factor(qf_weights(c.z, scaled, true)), 1.0, 1e-10);
  }
}
