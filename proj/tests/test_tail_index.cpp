#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "htsgd/errors.hpp"
#include "htsgd/stable_dist.hpp"
#include "htsgd/tail_index.hpp"

using namespace htsgd;

TEST(BlockSize, DivisorClosestToSqrt) {
  EXPECT_EQ(choose_block_size(100), 10u);
  EXPECT_EQ(choose_block_size(12), 3u);  // 3 and 4 straddle sqrt(12); 3 is closer
  EXPECT_EQ(choose_block_size(120000), 320u);  // 320 * 375
  EXPECT_EQ(choose_block_size(101), 10u);  // prime: lowered to 100
  EXPECT_THROW(choose_block_size(3), SizeError);
}

TEST(BlockSize, AlwaysDividesSomeNearbyLengthAndStaysNearSqrt) {
  for (std::size_t K = 4; K < 3000; K += 7) {
    const auto k1 = choose_block_size(K);
    const double r = std::sqrt(static_cast<double>(K));
    EXPECT_GE(k1, 2u) << K;
    EXPECT_GE(static_cast<double>(k1), r / 2.0 - 1.0) << K;
    EXPECT_LE(static_cast<double>(k1), 2.0 * r) << K;
  }
}

// Hand-worked oracle on four values, k1 = 2.
TEST(Estimator, SmallHandComputedCase) {
  const std::vector<double> xs = {1.0, 2.0, -3.0, -4.0};
  const auto est = estimate_alpha(xs, 2);
  const double mean_y = (std::log(3.0) + std::log(7.0)) / 2.0;
  const double mean_x = std::log(24.0) / 4.0;
  EXPECT_NEAR(est.alpha_hat, std::log(2.0) / (mean_y - mean_x), 1e-12);
  EXPECT_EQ(est.k1, 2u);
  EXPECT_EQ(est.k2, 2u);
  EXPECT_EQ(est.n_used, 4u);
  EXPECT_EQ(est.n_dropped, 0u);
}

TEST(Estimator, ZerosAndRemainderAreDropped) {
  const std::vector<double> xs = {0.0, 1.0, 2.0, 0.0, -3.0, -4.0, 5.0};
  const auto est = estimate_alpha(xs, 2);
  EXPECT_EQ(est.n_used, 4u);
  EXPECT_EQ(est.n_dropped, 3u);
  EXPECT_DOUBLE_EQ(est.alpha_hat, estimate_alpha(std::vector<double>{1.0, 2.0, -3.0, -4.0}, 2).alpha_hat);
}

TEST(Estimator, ScaleInvariant) {
  const auto xs = sample_sas({1.4, 1.0}, 10000, {41, 0});
  auto ys = xs;
  for (auto& y : ys) {
    y *= 37.5;
  }
  EXPECT_NEAR(estimate_alpha(xs).alpha_hat, estimate_alpha(ys).alpha_hat, 1e-10);
}

class EstimatorAccuracy : public ::testing::TestWithParam<double> {};

TEST_P(EstimatorAccuracy, RecoversAlphaOnLargePools) {
  const double alpha = GetParam();
  const auto xs = sample_sas({alpha, 2.0}, 100000, {42, static_cast<std::uint64_t>(alpha * 100)});
  EXPECT_NEAR(estimate_alpha(xs).alpha_hat, alpha, 0.1);
}

INSTANTIATE_TEST_SUITE_P(Alphas, EstimatorAccuracy, ::testing::Values(1.0, 1.2, 1.5, 1.8, 2.0));

TEST(Estimator, Errors) {
  const std::vector<double> xs = {1.0, 2.0, 3.0};
  EXPECT_THROW(estimate_alpha(xs, 1), ParameterError);
  EXPECT_THROW(estimate_alpha(xs, 4), SizeError);
  EXPECT_THROW(estimate_alpha(std::vector<double>(10, 0.0), 2), DegenerateInputError);
  EXPECT_THROW(estimate_alpha(std::vector<double>{1.0, NAN, 2.0, 3.0}, 2), DegenerateInputError);
}

TEST(GradientNoise, ConcatenatesCenteredMinibatchGradients) {
  const std::vector<double> full = {1.0, -1.0};
  std::vector<std::vector<double>> minis;
  std::vector<double> flat;
  const auto draws = sample_sas({1.5, 1.0}, 2000, {43, 0});
  for (std::size_t i = 0; i < draws.size(); i += 2) {
    minis.push_back({full[0] + draws[i], full[1] + draws[i + 1]});
  }
  const auto est = gradient_noise_alpha(full, minis);
  const auto ref = estimate_alpha(draws);
  EXPECT_NEAR(est.alpha_hat, ref.alpha_hat, 1e-9);
  minis.push_back({1.0});
  EXPECT_THROW(gradient_noise_alpha(full, minis), ShapeError);
}
