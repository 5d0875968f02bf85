#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "htsgd/cli.hpp"

using namespace htsgd::cli;

namespace {

struct Invocation {
  int code = 0;
  std::string out;
  std::string err;
};

Invocation invoke(std::vector<std::string> args) {
  args.insert(args.begin(), "htsgd");
  std::vector<char*> argv;
  for (auto& a : args) {
    argv.push_back(a.data());
  }
  std::ostringstream out;
  std::ostringstream err;
  Invocation r;
  r.code = main_entry(static_cast<int>(argv.size()), argv.data(), out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

std::string without_clock_lines(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::string out;
  while (std::getline(in, line)) {
    if (line.rfind("# started_utc", 0) == 0 || line.rfind("# wall_time_s", 0) == 0) {
      continue;
    }
    out += line + "\n";
  }
  return out;
}

std::string config_key(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const ConfigError& e) {
    return e.key();
  }
  return "<no error>";
}

}  // namespace

TEST(Config, SerializeRoundTripForEveryCommand) {
  for (const auto& cmd : command_names()) {
    const auto c = resolve_config(cmd, {}, {});
    EXPECT_EQ(parse_config(serialize(c)), c) << cmd;
    EXPECT_EQ(config_hash(parse_config(serialize(c))), config_hash(c));
  }
  const auto c = parse_config("command = converge\nKs = 10, 100 # sweep\nalpha = 1.7\n\n");
  EXPECT_EQ(c.list("Ks"), (std::vector<double>{10.0, 100.0}));
  EXPECT_EQ(parse_config(serialize(c)), c);
}

TEST(Config, StrictErrorsNameTheKey) {
  EXPECT_EQ(config_key([] { parse_config("command = sample\nalpha = 1.2\nalpha = 1.3\n"); }), "alpha");
  EXPECT_EQ(config_key([] { parse_config("command = sample\nalhpa = 1.2\n"); }), "alhpa");
  EXPECT_EQ(config_key([] { parse_config("command = sample\nn = many\n"); }), "n");
  EXPECT_EQ(config_key([] { parse_config("command = sample\nn = 1.5\n"); }), "n");
  EXPECT_EQ(config_key([] { parse_config("alpha = 1.2\n"); }), "command");
  EXPECT_EQ(config_key([] { parse_config("command = nope\n"); }), "command");
  EXPECT_EQ(config_key([] { parse_config("command = sample\nformat = xml\n"); }), "format");
  EXPECT_THROW(parse_config("command = sample\njust text\n"), ConfigError);
}

TEST(Config, FlagsOverrideFile) {
  const auto c = resolve_config("sample", {{"alpha", "1.2"}, {"n", "5"}}, {{"alpha", "1.7"}});
  EXPECT_DOUBLE_EQ(c.real("alpha"), 1.7);
  EXPECT_EQ(c.integer("n"), 5);
  EXPECT_DOUBLE_EQ(c.real("sigma"), 1.0);
  EXPECT_NE(config_hash(c), config_hash(resolve_config("sample", {}, {})));
  EXPECT_EQ(config_hash(c).size(), 16u);
}

TEST(Cli, OutputIsReproducibleAndCarriesProvenance) {
  const auto a = invoke({"sample", "--alpha", "1.3", "--n", "50", "--seed", "42"});
  const auto b = invoke({"sample", "--alpha=1.3", "--n", "50", "--seed", "42"});
  ASSERT_EQ(a.code, kExitOk) << a.err;
  EXPECT_EQ(without_clock_lines(a.out), without_clock_lines(b.out));
  const auto c = resolve_config("sample", {}, {{"alpha", "1.3"}, {"n", "50"}, {"seed", "42"}});
  EXPECT_NE(a.out.find("# config_hash: " + config_hash(c)), std::string::npos);
  EXPECT_NE(a.out.find("# seed: 42"), std::string::npos);
  EXPECT_NE(a.out.find("# started_utc: "), std::string::npos);
  EXPECT_NE(a.out.find("\nx\n"), std::string::npos);
  const auto d = invoke({"sample", "--alpha", "1.3", "--n", "50", "--seed", "43"});
  EXPECT_NE(without_clock_lines(a.out), without_clock_lines(d.out));
}

TEST(Cli, ConfigFileAndNegativeListFlag) {
  const auto path = std::filesystem::temp_directory_path() / "htsgd_cli_meta.cfg";
  {
    std::ofstream f(path);
    f << "# two valleys\ncommand = metastability\nsaddles = 0\nalpha = 1.2\n";
  }
  const auto r = invoke({"metastability", "--config", path.string(), "--minima", "-1,2"});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  EXPECT_NE(r.out.find("\"provenance\""), std::string::npos);
  EXPECT_NE(r.out.find("\"pi\""), std::string::npos);
  std::filesystem::remove(path);
}

TEST(Cli, ExitCodes) {
  const auto unknown = invoke({"sample", "--bogus", "1"});
  EXPECT_EQ(unknown.code, kExitConfig);
  EXPECT_NE(unknown.err.find("\"error\":\"config\""), std::string::npos);

  const auto typed = invoke({"sample", "--n", "abc"});
  EXPECT_EQ(typed.code, kExitConfig);
  EXPECT_NE(typed.err.find("\"key\":\"n\""), std::string::npos);

  const auto domain = invoke({"sample", "--alpha", "2.5"});
  EXPECT_EQ(domain.code, kExitConfig);

  EXPECT_EQ(invoke({}).code, kExitConfig);

  const auto diverged = invoke({"train", "--eta", "1e30", "--iters", "20", "--log_every", "5", "--synthetic_n", "200",
                                "--width", "8", "--depth", "2"});
  EXPECT_EQ(diverged.code, kExitDiverged) << diverged.err;
  EXPECT_NE(diverged.out.find("# partial:"), std::string::npos);
}

TEST(Cli, WritesToOutputDirectoryFromEnvironment) {
  const auto dir = std::filesystem::temp_directory_path() / "htsgd_cli_out";
  std::filesystem::remove_all(dir);
  setenv("HTSGD_OUTPUT_DIR", dir.c_str(), 1);
  const auto r = invoke({"estimate", "--n", "2000", "--format", "json"});
  unsetenv("HTSGD_OUTPUT_DIR");
  ASSERT_EQ(r.code, kExitOk) << r.err;
  EXPECT_TRUE(r.out.empty());
  std::ifstream in(dir / "estimate.json");
  std::stringstream buf;
  buf << in.rdbuf();
  EXPECT_NE(buf.str().find("\"alpha_hat\""), std::string::npos);
  std::filesystem::remove_all(dir);
}

TEST(Cli, EveryCommandRunsOnSmallInputs) {
  const std::vector<std::vector<std::string>> runs = {
      {"stability", "--n", "3000"},
      {"exit-time", "--eps", "0.3", "--reps", "4"},
      {"exit-time", "--objective", "double_well", "--eps", "0.3", "--reps", "2", "--a", "0.5"},
      {"transition", "--eps", "0.3", "--reps", "1", "--max_steps", "20000"},
      {"converge", "--Ks", "10,100", "--reps", "4", "--holder_pairs", "100", "--sigma_draws", "1000"},
      {"train", "--synthetic_n", "200", "--iters", "20", "--log_every", "10", "--width", "8"},
      {"sweep", "--synthetic_n", "200", "--iters", "20", "--log_every", "10", "--widths", "4,8"},
  };
  for (const auto& args : runs) {
    const auto r = invoke(args);
    EXPECT_EQ(r.code, kExitOk) << args[0] << ": " << r.err;
  }
}

TEST(CliExamples, EstimateRecoversAlpha) {
  const auto r = invoke({"estimate", "--alpha", "1.5", "--n", "100000", "--k1", "100", "--seed", "7", "--format", "json"});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  const auto at = r.out.find("\"alpha_hat\": ");
  ASSERT_NE(at, std::string::npos);
  EXPECT_NEAR(std::stod(r.out.substr(at + 13)), 1.5, 0.05);
}

TEST(CliExamples, MetastabilityTwoWellsAtAlphaOne) {
  const auto r = invoke({"metastability", "--minima", "-1,2", "--saddles", "0", "--alpha", "1.0"});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  const auto at = r.out.find("\"pi\": [");
  ASSERT_NE(at, std::string::npos);
  std::istringstream in(r.out.substr(at + 7));
  double p0 = 0.0;
  double p1 = 0.0;
  char comma = 0;
  in >> p0 >> comma >> p1;
  EXPECT_NEAR(p0, 1.0 / 3.0, 1e-12);
  EXPECT_NEAR(p1, 2.0 / 3.0, 1e-12);
}
