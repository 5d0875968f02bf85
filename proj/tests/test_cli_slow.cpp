#include <gtest/gtest.h>

#include <sstream>

#include "htsgd/cli.hpp"

using namespace htsgd::cli;

TEST(CliExamples, QuadraticExitTimeNearPrediction) {
  auto config = resolve_config("exit-time", {},
                               {{"objective", "quadratic"}, {"alpha", "1.5"}, {"eps", "0.01"}, {"a", "1"}, {"reps", "500"},
                                {"threads", "0"}});
  std::ostringstream out;
  std::ostringstream err;
  ASSERT_EQ(run(config, out, err), kExitOk) << err.str();
  const std::string text = out.str();
  const auto at = text.find("# summary: mean_exit_time = ");
  ASSERT_NE(at, std::string::npos);
  const double mean = std::stod(text.substr(at + 28));
  EXPECT_NEAR(mean / 750.0, 1.0, 0.15);
}
