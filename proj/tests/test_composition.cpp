#include <gtest/gtest.h>

#include <cmath>

#include "helpers.hpp"
#include "stocg/errors.hpp"

using namespace stocg;
using namespace testing_helpers;

TEST(Composition, ZeroNoisePassthrough) {
  Mat two(1, 1);
  two << 2.0;
  auto p = make_problem({linear_map(two, Vec::Zero(1))});
  auto oracle = StochasticOracle::gaussian(p, NoiseModel::none(1), 1);
  const auto s = oracle.sample_level(1, vec({3.0}));
  EXPECT_DOUBLE_EQ(s.value(0), 6.0);
  EXPECT_DOUBLE_EQ(s.jacobian_t(0, 0), 2.0);
}

TEST(Composition, GaussianValueMeanWithinCltBand) {
  auto p = make_problem({linear_map(Mat::Identity(1, 1), Vec::Zero(1))});
  auto oracle = StochasticOracle::gaussian(p, NoiseModel::gaussian(1, 1.0, 0.0), 7);
  const int n = 10000;
  double sum = 0.0;
  for (int i = 0; i < n; ++i) sum += oracle.sample_value(1, vec({0.0}))(0);
  EXPECT_LT(std::abs(sum / n), 3.92 / std::sqrt(n));
  EXPECT_EQ(oracle.value_calls(), n);
}

TEST(Composition, DimensionMismatchIsContractError) {
  auto p = make_problem({sq_norm_map(3), linear_map(Mat::Ones(3, 2), Vec::Zero(3))});
  auto oracle = StochasticOracle::gaussian(p, NoiseModel::none(2), 1);
  // Level 2 maps R^2 -> R^3; a point of dimension 3 is invalid.
  EXPECT_THROW(oracle.sample_value(2, Vec::Zero(3)), ContractError);
  EXPECT_THROW(p->level_value(2, Vec::Zero(3)), ContractError);
}

TEST(Composition, BadDimensionChainRejected) {
  EXPECT_THROW(make_problem({sq_norm_map(3), linear_map(Mat::Ones(2, 2), Vec::Zero(2))}),
               ConfigError);
  // Outermost level must be scalar.
  EXPECT_THROW(make_problem({linear_map(Mat::Ones(2, 2), Vec::Zero(2))}), ConfigError);
}

TEST(Composition, ExactValueExamples) {
  auto p2 = make_problem({sq_norm_map(2), linear_map(Mat::Identity(2, 2), Vec::Zero(2))});
  EXPECT_DOUBLE_EQ(exact_value(*p2, vec({1, 1})), 2.0);
  Mat c(1, 2);
  c << 1, 2;
  auto p1 = make_problem({linear_map(c, Vec::Zero(1))});
  EXPECT_DOUBLE_EQ(exact_value(*p1, vec({3, 4})), 11.0);
}

TEST(Composition, ExactGradientExamples) {
  auto p = make_problem({sq_norm_map(2)});
  const Vec g = exact_gradient(*p, vec({1, 2}));
  EXPECT_DOUBLE_EQ(g(0), 2.0);
  EXPECT_DOUBLE_EQ(g(1), 4.0);

  std::mt19937_64 rng(3);
  const Mat a = random_mat(4, 3, rng);
  const Vec x = random_vec(3, rng);
  auto pa = make_problem({sq_norm_map(4, 0.5), linear_map(a, Vec::Zero(4))});
  const Vec expect = a.transpose() * a * x;
  EXPECT_LT((exact_gradient(*pa, x) - expect).norm(), 1e-12 * (1 + expect.norm()));
}

TEST(Composition, GradientMatchesFiniteDifferencesOnDeepStack) {
  std::mt19937_64 rng(11);
  const Mat a = random_mat(3, 4, rng);
  const Mat b = random_mat(3, 3, rng);
  auto p = make_problem({sq_norm_map(3), sin_map(3), linear_map(b, random_vec(3, rng)),
                         linear_map(a, random_vec(3, rng))});
  for (int trial = 0; trial < 5; ++trial) {
    const Vec x = random_vec(4, rng);
    const Vec g = exact_gradient(*p, x);
    const Vec fd = numeric_gradient([&](const Vec& y) { return exact_value(*p, y); }, x);
    EXPECT_LE((g - fd).norm(), 1e-5 * std::max(1.0, g.norm()));
  }
}

TEST(Composition, FiniteDifferenceJacobianMatchesAnalytic) {
  const SmoothMap m = sin_map(3);
  const Vec y = vec({0.1, -0.7, 2.0});
  EXPECT_LT((finite_difference_jacobian_t(m, y) - m.jacobian_t(y)).norm(), 1e-8);
}

TEST(Composition, ChainProductNoiseFree) {
  auto p = make_problem({sq_norm_map(2), linear_map(Mat::Identity(2, 2), Vec::Zero(2))});
  auto oracle = StochasticOracle::gaussian(p, NoiseModel::none(2), 5);
  const Vec x = vec({0.3, -1.2});
  const auto pts = p->inner_points(x);
  const auto cs = oracle.chain_sample(pts);
  EXPECT_LT((cs.product - exact_gradient(*p, x)).norm(), 1e-14);

  std::mt19937_64 rng(2);
  auto p3 = make_problem({sq_norm_map(3), sin_map(3), linear_map(random_mat(3, 2, rng), Vec::Zero(3))});
  auto o3 = StochasticOracle::gaussian(p3, NoiseModel::none(3), 5);
  const Vec x3 = vec({0.4, 0.9});
  const auto pts3 = p3->inner_points(x3);
  EXPECT_LT((o3.chain_sample(pts3).product - exact_gradient(*p3, x3)).norm(), 1e-12);
}

TEST(Composition, ChainProductMeanMatchesProductOfMeans) {
  // Independence across levels makes E[J_2 J_1] = E[J_2] E[J_1].
  std::mt19937_64 rng(4);
  const Mat a = random_mat(2, 2, rng);
  auto p = make_problem({sq_norm_map(2), linear_map(a, Vec::Zero(2))});
  auto oracle = StochasticOracle::gaussian(p, NoiseModel::gaussian(2, 0.0, 1.0), 99);
  const Vec x = vec({0.5, -0.5});
  const auto pts = p->inner_points(x);
  const int n = 10000;
  Vec sum = Vec::Zero(2), sumsq = Vec::Zero(2);
  for (int i = 0; i < n; ++i) {
    const Vec v = oracle.chain_sample(pts).product;
    sum += v;
    sumsq += v.cwiseProduct(v);
  }
  const Vec mean = sum / n;
  const Vec expect = exact_gradient(*p, x);
  for (int j = 0; j < 2; ++j) {
    const double sd = std::sqrt(sumsq(j) / n - mean(j) * mean(j));
    EXPECT_LT(std::abs(mean(j) - expect(j)), 3.92 * sd / std::sqrt(n)) << j;
  }
}

TEST(Composition, StreamsAreDeterministicAndIndependentOfOrder) {
  auto p = make_problem({sq_norm_map(2), linear_map(Mat::Identity(2, 2), Vec::Zero(2))});
  auto a = StochasticOracle::gaussian(p, NoiseModel::gaussian(2, 1.0, 1.0), 42);
  auto b = a.reseeded(42);
  // Drawing Jacobians first on one clone must not change its value draws.
  (void)b.sample_jacobian_t(2, Vec::Zero(2));
  EXPECT_EQ(a.sample_value(2, Vec::Zero(2)), b.sample_value(2, Vec::Zero(2)));
  auto c = a.reseeded(43);
  EXPECT_NE(a.sample_value(1, Vec::Zero(2)), c.sample_value(1, Vec::Zero(2)));
}

TEST(Composition, NonFiniteSampleIsNumericalError) {
  SmoothMap bad = sq_norm_map(1);
  bad.value = [](const Vec&) -> Vec { return Vec::Constant(1, std::nan("")); };
  auto p = make_problem({bad});
  auto oracle = StochasticOracle::gaussian(p, NoiseModel::none(1), 1);
  EXPECT_THROW(oracle.sample_value(1, vec({1.0})), NumericalError);
}
