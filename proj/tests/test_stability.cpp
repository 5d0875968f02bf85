#include <gtest/gtest.h>

#include <cmath>

#include "htsgd/errors.hpp"
#include "htsgd/rng.hpp"
#include "htsgd/stability_test.hpp"
#include "htsgd/stable_dist.hpp"
#include "htsgd/stats.hpp"

using namespace htsgd;

namespace {

std::vector<double> gaussian_mixture(std::size_t n, RngStream rng) {
  PhiloxEngine e(rng);
  std::vector<double> xs(n);
  for (auto& x : xs) {
    x = (uniform_open(e) < 0.5 ? -3.0 : 3.0) + standard_normal(e);
  }
  return xs;
}

}  // namespace

TEST(Stability, ReportFieldsAreConsistent) {
  const auto xs = sample_sas({1.5, 1.0}, 12000, {51, 0});
  const auto rep = stability_condition(xs, {51, 1});
  const double c = std::max(std::abs(rep.alpha_x - rep.alpha_12), std::abs(rep.alpha_xp - rep.alpha_123));
  EXPECT_GE(rep.c_st, 0.0);
  EXPECT_DOUBLE_EQ(rep.c_st, c);
  EXPECT_EQ(rep.threshold, kDefaultStabilityThreshold);
  EXPECT_EQ(is_alpha_stable(rep), rep.c_st <= rep.threshold);
}

TEST(Stability, Deterministic) {
  const auto xs = sample_sas({1.3, 1.0}, 6000, {52, 0});
  const auto a = stability_condition(xs, {52, 1});
  const auto b = stability_condition(xs, {52, 1});
  EXPECT_EQ(a.c_st, b.c_st);
  EXPECT_EQ(a.alpha_123, b.alpha_123);
}

TEST(Stability, SumOfThreeSaSHasSameAlpha) {
  // Sum-stable input: each partial estimate recovers alpha.
  const auto xs = sample_sas({1.5, 1.0}, 120000, {53, 0});
  const auto rep = stability_condition(xs, {53, 1});
  for (double a : {rep.alpha_x, rep.alpha_12, rep.alpha_xp, rep.alpha_123}) {
    EXPECT_NEAR(a, 1.5, 0.15);
  }
}

TEST(Stability, MixtureScoresWorseThanStableLaw) {
  std::vector<double> stable;
  std::vector<double> mixture;
  for (std::uint64_t r = 0; r < 15; ++r) {
    stable.push_back(stability_condition(sample_sas({1.5, 1.0}, 30000, {54, r}), {54, 100 + r}).c_st);
    mixture.push_back(stability_condition(gaussian_mixture(30000, {55, r}), {55, 100 + r}).c_st);
  }
  EXPECT_LT(median(stable), median(mixture));
}

TEST(Stability, TooFewSamples) {
  EXPECT_THROW(stability_condition(std::vector<double>(kMinStabilitySamples - 1, 1.0), {1, 0}), SizeError);
}
