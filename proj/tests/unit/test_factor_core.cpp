#include "test_support.hpp"
#include "ttnmf/errors.hpp"
#include "ttnmf/factor_core.hpp"

#include <Eigen/Eigenvalues>
#include <gtest/gtest.h>

using namespace ttnmf;
using ttnmf::testing::random_binary;
using ttnmf::testing::random_nonneg;

namespace {

Matrix row(std::initializer_list<double> v) {
  Matrix m(1, static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) m(0, i++) = x;
  return m;
}

// Direct evaluation of 0.5 * sum_{t >= L} (h_t - sum_l w_l h_{t-l})^2.
double residual_oracle(const Vector& h, const Vector& w, const std::vector<int>& lags) {
  int max_lag = 0;
  for (int l : lags) max_lag = std::max(max_lag, l);
  double s = 0.0;
  for (Eigen::Index t = max_lag; t < h.size(); ++t) {
    double r = h(t);
    for (std::size_t q = 0; q < lags.size(); ++q) r -= w(static_cast<Eigen::Index>(q)) * h(t - lags[q]);
    s += r * r;
  }
  return 0.5 * s;
}

}  // namespace

TEST(LagDesign, UnitShift) {
  const Matrix d = build_lag_design_matrix(row({1, 2, 3, 4}), 0, LagSet({1}));
  EXPECT_EQ(d, row({0, 1, 2, 3}));
}

TEST(LagDesign, TwoLags) {
  const Matrix d = build_lag_design_matrix(row({1, 2, 3, 4, 5}), 0, LagSet({1, 3}));
  Matrix expected(2, 5);
  expected << 0, 0, 0, 3, 4, 0, 0, 0, 1, 2;
  EXPECT_EQ(d, expected);
}

TEST(LagDesign, ZeroRow) {
  EXPECT_TRUE(build_lag_design_matrix(Matrix::Zero(1, 6), 0, LagSet({1, 2})).isZero());
}

TEST(LagDesign, LagTooLargeThrows) {
  EXPECT_THROW(build_lag_design_matrix(row({1, 2, 3}), 0, LagSet({3})), ConfigError);
}

TEST(TemporalPenalty, ConstantSeriesUnitWeightIsZero) {
  Matrix omega(1, 1);
  omega << 1.0;
  for (auto form : {PenaltyForm::residual, PenaltyForm::laplacian})
    EXPECT_NEAR(temporal_penalty_value(row({4, 4, 4}), omega, LagSet({1}), form), 0.0, 1e-14);
}

TEST(TemporalPenalty, LinearSeriesUnitWeight) {
  Matrix omega(1, 1);
  omega << 1.0;
  EXPECT_DOUBLE_EQ(temporal_penalty_value(row({1, 2, 3}), omega, LagSet({1}), PenaltyForm::residual),
                   1.0);
  EXPECT_NEAR(temporal_penalty_value(row({1, 2, 3}), omega, LagSet({1}), PenaltyForm::laplacian),
              1.0, 1e-14);
}

TEST(TemporalPenalty, ExactArRowsGiveZero) {
  Matrix h(2, 8);
  h.row(0) << 1, 1, 2, 3, 5, 8, 13, 21;  // Fibonacci: lags {1,2}, weights 1,1
  h.row(1) << 2, 1, 1.5, 1.25, 1.375, 1.3125, 1.34375, 1.328125;  // weights 0.5,0.5
  Matrix omega(2, 2);
  omega << 1, 1, 0.5, 0.5;
  EXPECT_NEAR(temporal_penalty_value(h, omega, LagSet({1, 2}), PenaltyForm::residual), 0.0, 1e-20);
  EXPECT_NEAR(temporal_penalty_value(h, omega, LagSet({1, 2}), PenaltyForm::laplacian), 0.0, 1e-10);
}

TEST(TemporalPenalty, ZeroWeightsKeepOnlySelfTerms) {
  std::mt19937_64 rng(2);
  const Matrix h = random_nonneg(3, 12, rng);
  const Matrix omega = Matrix::Zero(3, 2);
  const LagSet lags({1, 4});
  const double expected = 0.5 * h.rightCols(12 - 4).squaredNorm();
  EXPECT_NEAR(temporal_penalty_value(h, omega, lags, PenaltyForm::residual), expected, 1e-12);
  EXPECT_NEAR(temporal_penalty_value(h, omega, lags, PenaltyForm::laplacian), expected, 1e-12);

  const TemporalGraph g = build_temporal_graph(Vector::Zero(2), lags, 12);
  const Matrix s = g.dense_weights();
  EXPECT_TRUE((s - Matrix(s.diagonal().asDiagonal())).isZero());
}

TEST(TemporalPenalty, EmptyLagSetIsZero) {
  std::mt19937_64 rng(4);
  EXPECT_EQ(temporal_penalty_value(random_nonneg(2, 5, rng), Matrix(2, 0), LagSet(),
                                   PenaltyForm::residual),
            0.0);
}

TEST(TemporalPenalty, FormsAgreeOnRandomInstances) {
  std::mt19937_64 rng(20);
  std::uniform_int_distribution<int> k_dist(1, 3), t_dist(8, 30), lag_count(1, 3), lag_val(1, 6);
  double worst = 0.0;
  for (int trial = 0; trial < 200; ++trial) {
    const int k = k_dist(rng);
    const int t = t_dist(rng);
    std::vector<int> raw;
    const int count = lag_count(rng);
    while (static_cast<int>(raw.size()) < count) {
      const int l = lag_val(rng);
      if (std::find(raw.begin(), raw.end(), l) == raw.end()) raw.push_back(l);
    }
    const LagSet lags(raw);
    const Matrix h = random_nonneg(k, t, rng);
    const Matrix omega = random_nonneg(k, count, rng, 0.6);
    const double r = temporal_penalty_value(h, omega, lags, PenaltyForm::residual);
    const double l = temporal_penalty_value(h, omega, lags, PenaltyForm::laplacian);
    double direct = 0.0;
    for (int p = 0; p < k; ++p) direct += residual_oracle(h.row(p), omega.row(p), lags.lags());
    EXPECT_NEAR(r, direct, 1e-12 * std::max(1.0, direct));
    worst = std::max(worst, ttnmf::testing::relative_gap(r, l));
  }
  EXPECT_LE(worst, 1e-8);
}

TEST(TemporalGraph, QuadraticFormMatchesDenseMatrices) {
  std::mt19937_64 rng(31);
  const LagSet lags({1, 3});
  const Vector w = random_nonneg(2, 1, rng);
  const Vector h = random_nonneg(15, 1, rng);
  const TemporalGraph g = build_temporal_graph(w, lags, 15);
  const Matrix s = g.dense_weights();
  const Matrix lap = g.dense_laplacian();
  // Laplacian rows sum to the self-loop weight.
  for (Eigen::Index t = 0; t < 15; ++t) EXPECT_NEAR(lap.row(t).sum(), s(t, t), 1e-12);
  EXPECT_NEAR((lap * h - g.apply_laplacian(h)).norm(), 0.0, 1e-12);
  double pairwise = 0.0;
  for (Eigen::Index a = 0; a < 15; ++a)
    for (Eigen::Index b = 0; b < 15; ++b) pairwise += s(a, b) * (h(a) - h(b)) * (h(a) - h(b));
  const double via_graph =
      0.5 * pairwise + 0.5 * g.degree_correction().dot(h.cwiseProduct(h));
  EXPECT_NEAR(via_graph, g.penalty(h), 1e-12);
  EXPECT_NEAR(g.penalty(h), residual_oracle(h, w, lags.lags()), 1e-12);
}

TEST(TemporalGraph, GradientMatchesFiniteDifferences) {
  std::mt19937_64 rng(32);
  const LagSet lags({1, 2, 5});
  const Vector w = random_nonneg(3, 1, rng, 0.5);
  const Vector h = random_nonneg(20, 1, rng);
  const TemporalGraph g = build_temporal_graph(w, lags, 20);
  const Vector grad = g.penalty_gradient(h);
  for (Eigen::Index t = 0; t < 20; ++t) {
    Vector hp = h, hm = h;
    hp(t) += 1e-6;
    hm(t) -= 1e-6;
    EXPECT_NEAR(grad(t), (g.penalty(hp) - g.penalty(hm)) / 2e-6, 1e-6);
  }
}

TEST(TemporalGraph, HessianNormMatchesEigenvalues) {
  std::mt19937_64 rng(33);
  const LagSet lags({1, 4});
  const Vector w = random_nonneg(2, 1, rng, 0.7);
  const TemporalGraph g = build_temporal_graph(w, lags, 25);
  Matrix hess(25, 25);
  for (Eigen::Index t = 0; t < 25; ++t) hess.col(t) = g.penalty_gradient(Vector::Unit(25, t));
  const double exact = Eigen::SelfAdjointEigenSolver<Matrix>(hess).eigenvalues().cwiseAbs().maxCoeff();
  const double est = g.hessian_norm();
  EXPECT_GE(est, exact * (1.0 - 1e-9));
  EXPECT_LE(est, exact * 1.05);
}

TEST(OrthoPenalty, Examples) {
  EXPECT_NEAR(ortho_penalty_value(Matrix::Identity(4, 3)), 0.0, 1e-15);
  Matrix c(2, 1);
  c << 1, 1;
  EXPECT_DOUBLE_EQ(ortho_penalty_value(c), 1.0);
  const Matrix q = Eigen::HouseholderQR<Matrix>(Matrix::Random(6, 3)).householderQ() *
                   Matrix::Identity(6, 3);
  const double scale = 1.7;
  EXPECT_NEAR(ortho_penalty_value(scale * q), std::pow(scale * scale - 1.0, 2) * 3, 1e-12);
}

TEST(Objective, ReducesToFitWithoutPenalties) {
  std::mt19937_64 rng(40);
  const RoutingMatrix a(random_binary(5, 6, rng));
  const Matrix w = random_nonneg(6, 2, rng), h = random_nonneg(2, 10, rng),
               x = random_nonneg(6, 10, rng);
  const FactorModel m(w, h, random_nonneg(2, 1, rng), LagSet({1}), a);
  EXPECT_NEAR(objective_value(x, m, RegularizationWeights{}, a), (x - w * h).squaredNorm(), 1e-12);
}

TEST(Objective, ZeroAtExactStationaryModel) {
  Matrix h(1, 6);
  h << 1, 1, 1, 1, 1, 1;
  Matrix omega(1, 1);
  omega << 1.0;
  Matrix w(2, 1);
  w << 1, 0;
  const RoutingMatrix a(Matrix::Identity(2, 2));
  const FactorModel m(w, h, omega, LagSet({1}), a);
  EXPECT_NEAR(objective_value(w * h, m, RegularizationWeights{2.0, 3.0, 0, 0}, a), 0.0, 1e-20);
}

TEST(Objective, EqualsSumOfTerms) {
  std::mt19937_64 rng(41);
  const RoutingMatrix a(random_binary(7, 9, rng));
  const Matrix w = random_nonneg(9, 3, rng), h = random_nonneg(3, 14, rng),
               x = random_nonneg(9, 14, rng), omega = random_nonneg(3, 2, rng, 0.5);
  const LagSet lags({1, 3});
  const FactorModel m(w, h, omega, lags, a);
  const RegularizationWeights rw{0.7, 0.3, 0, 0};
  const double terms = (x - w * h).squaredNorm() +
                       0.7 * temporal_penalty_value(h, omega, lags, PenaltyForm::residual) +
                       0.3 * ortho_penalty_value(a.entries() * w);
  EXPECT_NEAR(objective_value(x, m, rw, a), terms, 1e-12 * terms);
}

TEST(FactorModel, ValidatesShapesAndSigns) {
  const RoutingMatrix a(Matrix::Identity(3, 3));
  EXPECT_THROW(FactorModel(Matrix::Ones(3, 2), Matrix::Ones(3, 5), Matrix::Zero(2, 1), LagSet({1}), a),
               ShapeError);
  EXPECT_THROW(FactorModel(Matrix::Ones(3, 2), Matrix::Ones(2, 5), Matrix::Zero(2, 2), LagSet({1}), a),
               ShapeError);
  Matrix w = Matrix::Ones(3, 2);
  w(0, 0) = -1;
  EXPECT_THROW(FactorModel(w, Matrix::Ones(2, 5), Matrix::Zero(2, 1), LagSet({1}), a), ConfigError);
  const FactorModel ok(Matrix::Ones(3, 2), Matrix::Ones(2, 5), Matrix::Zero(2, 1), LagSet({1}), a);
  EXPECT_EQ(ok.compact_routing(), Matrix::Ones(3, 2));
}
