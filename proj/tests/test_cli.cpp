#include <gtest/gtest.h>

#include <sys/wait.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "json.hpp"
#include "potts/io.hpp"

namespace fs = std::filesystem;

namespace {

struct Run {
  int code = -1;
  std::string out;
};

Run run(const std::string& args) {
  const fs::path log = fs::temp_directory_path() / "potts_cli_test_stdout.txt";
  const std::string cmd = std::string(POTTS_CLI_PATH) + " " + args + " > " + log.string() + " 2>/dev/null";
  const int status = std::system(cmd.c_str());
  Run r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  std::ifstream in(log);
  std::stringstream ss;
  ss << in.rdbuf();
  r.out = ss.str();
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir = fs::temp_directory_path() / ("potts_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir);
    fs::create_directories(dir);
  }
  void TearDown() override { fs::remove_all(dir); }
  fs::path dir;
};

}  // namespace

TEST_F(Cli, SynthThenDenoise) {
  ASSERT_EQ(run("synth --n 300 --p 0.02 --sigma 0.05 --seed 4 --out-dir " + dir.string()).code, 0);
  for (const char* f : {"y.csv", "xbar.csv", "rbar.csv"}) EXPECT_TRUE(fs::exists(dir / f)) << f;
  const auto r = run("denoise --input " + (dir / "y.csv").string() + " --out " + (dir / "x.csv").string());
  ASSERT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("mode=auto"), std::string::npos);
  EXPECT_NE(r.out.find("lambda="), std::string::npos);
  EXPECT_EQ(potts::read_values((dir / "x.csv").string()).size(), 300u);

  const auto m = run("metrics --truth " + (dir / "xbar.csv").string() + " --estimate " + (dir / "x.csv").string());
  ASSERT_EQ(m.code, 0);
  EXPECT_NE(m.out.find("mse="), std::string::npos);
}

TEST_F(Cli, SynthDeterministicAndNoiseless) {
  const std::string a = (dir / "a").string(), b = (dir / "b").string();
  ASSERT_EQ(run("synth --n 100 --seed 7 --out-dir " + a).code, 0);
  ASSERT_EQ(run("synth --n 100 --seed 7 --out-dir " + b).code, 0);
  EXPECT_EQ(slurp(dir / "a" / "y.csv"), slurp(dir / "b" / "y.csv"));
  ASSERT_EQ(run("synth --n 100 --sigma 0 --seed 7 --out-dir " + a).code, 0);
  EXPECT_EQ(slurp(dir / "a" / "y.csv"), slurp(dir / "a" / "xbar.csv"));
}

TEST_F(Cli, FixedLambda) {
  std::ofstream(dir / "y.csv") << "0\n0\n1\n1\n";
  const auto r = run("denoise --input " + (dir / "y.csv").string() + " --lambda 0.1");
  ASSERT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("mode=fixed"), std::string::npos);
  EXPECT_NE(r.out.find("k_hat=2"), std::string::npos);
}

TEST_F(Cli, ExitCodes) {
  std::ofstream(dir / "const.csv") << "2\n2\n2\n2\n2\n";
  std::ofstream(dir / "bad.csv") << "1\nx\n";
  EXPECT_EQ(run("denoise --input " + (dir / "const.csv").string()).code, 3);
  EXPECT_EQ(run("denoise --input " + (dir / "bad.csv").string()).code, 2);
  EXPECT_EQ(run("denoise --input " + (dir / "missing.csv").string()).code, 2);
  EXPECT_EQ(run("denoise").code, 2);
  EXPECT_EQ(run("denoise --input " + (dir / "const.csv").string() + " --auto --lambda 1").code, 2);
  EXPECT_EQ(run("denoise --input " + (dir / "const.csv").string() + " --grid 1:0.1:5").code, 2);
  EXPECT_EQ(run("mcmc --input " + (dir / "const.csv").string()).code, 2);
  EXPECT_EQ(run("--help").code, 0);
}

TEST_F(Cli, Mcmc) {
  ASSERT_EQ(run("synth --n 120 --p 0.03 --seed 2 --out-dir " + dir.string()).code, 0);
  const std::string out = (dir / "mc").string();
  ASSERT_EQ(run("mcmc --input " + (dir / "y.csv").string() + " --tmc 50 --seed 3 --out-dir " + out).code, 0);
  EXPECT_EQ(potts::read_values(out + "/x_map.csv").size(), 120u);
  EXPECT_EQ(potts::read_values(out + "/x_mmse.csv").size(), 120u);
  const auto j = nlohmann::json::parse(slurp(dir / "mc" / "summary.json"));
  EXPECT_EQ(j.at("burn_in").get<int>(), 25);
  EXPECT_EQ(j.at("t_mc").get<int>(), 50);
  const auto first = slurp(dir / "mc" / "x_mmse.csv");
  ASSERT_EQ(run("mcmc --input " + (dir / "y.csv").string() + " --tmc 50 --seed 3 --out-dir " + out).code, 0);
  EXPECT_EQ(slurp(dir / "mc" / "x_mmse.csv"), first);
}

TEST_F(Cli, Experiment) {
  std::ofstream(dir / "cfg.json") << R"({"axis": "anr", "values": [2], "n": 100, "p": 0.03, "realizations": 2,
    "grid": {"lo": 1e-3, "hi": 1e3, "count": 40}, "methods": ["auto", "sicc", "oracle_mse"]})";
  const std::string out = (dir / "res.csv").string();
  ASSERT_EQ(run("experiment " + (dir / "cfg.json").string() + " --no-timing --out " + out).code, 0);
  const auto text = slurp(out);
  EXPECT_EQ(text.substr(0, text.find('\n')), "method,axis,axis_value,seed,lambda_hat,mse,jaccard,k_hat,seconds");
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 7);
  ASSERT_EQ(run("experiment " + (dir / "cfg.json").string() + " --no-timing --out " + out).code, 0);
  EXPECT_EQ(slurp(out), text);

  std::ofstream(dir / "bad.json") << R"({"axis": "anr", "values": [2], "colour": "red"})";
  EXPECT_EQ(run("experiment " + (dir / "bad.json").string()).code, 2);
}
