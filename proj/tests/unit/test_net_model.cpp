#include "test_support.hpp"
#include "ttnmf/errors.hpp"
#include "ttnmf/lag_set.hpp"
#include "ttnmf/net_model.hpp"

#include <gtest/gtest.h>

using namespace ttnmf;
using ttnmf::testing::random_binary;
using ttnmf::testing::random_nonneg;

TEST(LinkFlows, IdentityRoutingCopiesTraffic) {
  const RoutingMatrix a(Matrix::Identity(2, 2));
  Matrix x(2, 1);
  x << 2, 3;
  EXPECT_EQ(compute_link_flows(a, TrafficMatrix(x)).entries(), x);
}

TEST(LinkFlows, SharedLinkSumsFlows) {
  Matrix a(1, 2);
  a << 1, 1;
  Matrix x(2, 1);
  x << 2, 3;
  const Matrix y = compute_link_flows(RoutingMatrix(a), TrafficMatrix(x)).entries();
  ASSERT_EQ(y.rows(), 1);
  EXPECT_DOUBLE_EQ(y(0, 0), 5.0);
}

TEST(LinkFlows, MatchesTripleLoop) {
  std::mt19937_64 rng(7);
  const Matrix a = random_binary(5, 8, rng);
  const Matrix x = random_nonneg(8, 4, rng, 10.0);
  const Matrix y = compute_link_flows(RoutingMatrix(a), TrafficMatrix(x)).entries();
  for (int i = 0; i < 5; ++i)
    for (int t = 0; t < 4; ++t) {
      double s = 0.0;
      for (int j = 0; j < 8; ++j) s += a(i, j) * x(j, t);
      EXPECT_NEAR(y(i, t), s, 1e-12);
    }
}

TEST(LinkFlows, Linear) {
  std::mt19937_64 rng(11);
  const RoutingMatrix a(random_binary(6, 9, rng));
  const Matrix x1 = random_nonneg(9, 5, rng);
  const Matrix x2 = random_nonneg(9, 5, rng);
  const double alpha = 2.75;
  const Matrix lhs = compute_link_flows(a, TrafficMatrix(alpha * x1 + x2)).entries();
  const Matrix rhs = alpha * compute_link_flows(a, TrafficMatrix(x1)).entries() +
                     compute_link_flows(a, TrafficMatrix(x2)).entries();
  EXPECT_LE((lhs - rhs).norm(), 1e-12 * rhs.norm());
}

TEST(LinkFlows, ShapeMismatchThrows) {
  const RoutingMatrix a(Matrix::Identity(3, 3));
  EXPECT_THROW(compute_link_flows(a, TrafficMatrix(Matrix::Ones(2, 4))), ShapeError);
}

TEST(RoutingMatrix, RejectsNonBinary) {
  Matrix a = Matrix::Identity(2, 2);
  a(0, 1) = 0.5;
  EXPECT_THROW(RoutingMatrix{a}, ParseError);
}

TEST(TrafficMatrix, RejectsNegativeObservedEntry) {
  Matrix x = Matrix::Ones(2, 2);
  x(1, 0) = -1.0;
  EXPECT_THROW(TrafficMatrix{x}, ParseError);
  Matrix mask = Matrix::Ones(2, 2);
  mask(1, 0) = 0.0;
  EXPECT_NO_THROW(TrafficMatrix(x, mask));
}

TEST(TrafficMatrix, MaskShapeChecked) {
  EXPECT_THROW(TrafficMatrix(Matrix::Ones(2, 3), Matrix::Ones(3, 2)), ShapeError);
}

TEST(LagSet, ParsesAndSorts) {
  const LagSet l = LagSet::parse("3, 1,2");
  EXPECT_EQ(l.lags(), (std::vector<int>{1, 2, 3}));
  EXPECT_EQ(l.max_lag(), 3);
  EXPECT_EQ(l.to_string(), "1,2,3");
}

TEST(LagSet, RejectsInvalid) {
  EXPECT_THROW(LagSet({0, 1}), ConfigError);
  EXPECT_THROW(LagSet({2, 2}), ConfigError);
  EXPECT_THROW(LagSet::parse("1,x"), ConfigError);
  EXPECT_THROW(LagSet({5}).require_fits(5), ConfigError);
}

TEST(LagSet, DatasetProfiles) {
  EXPECT_EQ(internet2_lags().max_lag(), 288);
  EXPECT_EQ(geant_lags().max_lag(), 96);
}

TEST(Synthetic, NoiselessEqualsPlantedProduct) {
  const SyntheticScenario s = generate_synthetic(6, 4, 120, LagSet({1, 2}), 0.0, 3);
  EXPECT_EQ(s.traffic.od_pairs(), 30);
  EXPECT_EQ(s.routing.od_pairs(), 30);
  EXPECT_EQ((s.traffic.entries() - s.w_true * s.h_true).norm(), 0.0);
  EXPECT_GE(s.traffic.entries().minCoeff(), 0.0);
}

TEST(Synthetic, SameSeedIsDeterministic) {
  const auto a = generate_synthetic(6, 4, 80, LagSet({1, 2}), 0.05, 99);
  const auto b = generate_synthetic(6, 4, 80, LagSet({1, 2}), 0.05, 99);
  EXPECT_EQ(a.traffic.entries(), b.traffic.entries());
  EXPECT_EQ(a.routing.entries(), b.routing.entries());
  const auto c = generate_synthetic(6, 4, 80, LagSet({1, 2}), 0.05, 100);
  EXPECT_NE(a.traffic.entries(), c.traffic.entries());
}

TEST(Synthetic, NoiseLevelMatchesRelativeError) {
  const auto s = generate_synthetic(6, 4, 300, LagSet({1, 2}), 0.05, 5);
  const Matrix clean = s.w_true * s.h_true;
  const double rel = (s.traffic.entries() - clean).norm() / clean.norm();
  EXPECT_GE(rel, 0.03);
  EXPECT_LE(rel, 0.07);
}

TEST(Synthetic, EveryOdPairHasIngressAndEgress) {
  const auto s = generate_synthetic(5, 3, 40, LagSet({1}), 0.0, 1);
  const Vector len = s.routing.path_lengths();
  EXPECT_GE(len.minCoeff(), 3.0);
}

TEST(Synthetic, MissingFractionDrawsMask) {
  SynthOptions opt;
  opt.missing_fraction = 0.2;
  const auto s = generate_synthetic(6, 4, 200, LagSet({1, 2}), 0.0, 8, opt);
  ASSERT_TRUE(s.traffic.mask().has_value());
  const double observed = s.traffic.mask()->mean();
  EXPECT_NEAR(observed, 0.8, 0.03);
}

TEST(Split, Shapes) {
  const TrafficMatrix x(Matrix::Ones(4, 10));
  const auto [train, test] = split_train_test(x, 7);
  EXPECT_EQ(train.timestamps(), 7);
  EXPECT_EQ(test.timestamps(), 3);
  EXPECT_EQ(train.od_pairs(), 4);
}

TEST(Split, DatasetProtocols) {
  EXPECT_EQ(split_train_test(TrafficMatrix(Matrix::Zero(2, 3168)), 2016).second.timestamps(), 1152);
  EXPECT_EQ(split_train_test(TrafficMatrix(Matrix::Zero(2, 2016)), 1344).second.timestamps(), 672);
}

TEST(Split, RejectsOutOfRange) {
  const TrafficMatrix x(Matrix::Ones(2, 5));
  EXPECT_THROW(split_train_test(x, 0), ConfigError);
  EXPECT_THROW(split_train_test(x, 5), ConfigError);
}
