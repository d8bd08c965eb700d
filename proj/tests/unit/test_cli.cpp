#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <nlohmann/json.hpp>

namespace {

namespace fs = std::filesystem;

const std::string kCli = NETE_CLI_PATH;
const std::string kData = NETE_TEST_DATA_DIR;

struct CliResult {
  int code;
  std::string out;
};

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("nete_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  CliResult run(const std::string& args) const {
    const std::string out_file = path("stdout.txt");
    const std::string cmd = kCli + " " + args + " > " + out_file + " 2> " + path("stderr.txt");
    const int status = std::system(cmd.c_str());
    std::ifstream in(out_file);
    std::stringstream ss;
    ss << in.rdbuf();
    return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, ss.str()};
  }

  void write(const std::string& name, const std::string& text) const { std::ofstream(path(name)) << text; }

  static std::string slurp(const std::string& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
  }

  fs::path dir_;
};

TEST_F(Cli, SimulateEstimateHill) {
  write("sim.json", R"({"alpha": 1.0, "beta": 2.5, "d_z": 10, "d_u": 3, "n": 3000, "seed": 4})");
  const CliResult sim = run("simulate --config " + path("sim.json") + " --out " + path("data.csv"));
  ASSERT_EQ(sim.code, 0) << sim.out;
  EXPECT_TRUE(fs::exists(path("data.csv")));
  EXPECT_NEAR(nlohmann::json::parse(sim.out).at("ground_truth").get<double>(), 5.0 / 3.0, 1e-12);

  const CliResult est = run("estimate --data " + path("data.csv") + " --method evt-dr --alpha auto --threshold auto --seed 7");
  ASSERT_EQ(est.code, 0);
  const auto j = nlohmann::json::parse(est.out);
  EXPECT_EQ(j.at("method"), "evt-dr");
  EXPECT_DOUBLE_EQ(j.at("theta_hat").get<double>(), j.at("eta_hat").get<double>() * j.at("mu_hat").get<double>());
  EXPECT_EQ(run("estimate --data " + path("data.csv") + " --method evt-dr --seed 7").out, est.out);

  const CliResult fixed = run("estimate --data " + path("data.csv") + " --method naive-ipw --alpha 1 --threshold 5");
  ASSERT_EQ(fixed.code, 0);
  EXPECT_EQ(nlohmann::json::parse(fixed.out).at("threshold_t").get<double>(), 5.0);

  const CliResult hill = run("hill --data " + path("data.csv"));
  ASSERT_EQ(hill.code, 0);
  const auto h = nlohmann::json::parse(hill.out);
  EXPECT_GT(h.at("gamma_hat").get<double>(), 0.0);
  EXPECT_GE(h.at("k").get<int>(), 29);
}

TEST_F(Cli, ExitCodes) {
  EXPECT_EQ(run("estimate --data " + path("missing.csv")).code, 3);
  EXPECT_EQ(run("semisyn --wavesurge " + path("missing.csv")).code, 3);
  EXPECT_EQ(run("estimate --data x.csv --bogus").code, 2);
  EXPECT_EQ(run("frobnicate").code, 2);
  EXPECT_EQ(run("").code, 2);
  write("bad.csv", "x1,d,y,u1\n0.1,1,2\n");
  EXPECT_EQ(run("estimate --data " + path("bad.csv")).code, 3);
  write("tiny.csv", "x1,d,y,u1\n0.1,1,2,1\n0.2,0,1,2\n0.3,1,2,3\n0.4,0,1,4\n");
  EXPECT_EQ(run("estimate --data " + path("tiny.csv") + " --threshold 100 --alpha 1").code, 4);
  EXPECT_EQ(run("estimate --data " + path("tiny.csv") + " --threshold soon").code, 2);
  EXPECT_EQ(run("estimate --data " + path("tiny.csv") + " --method tmle").code, 2);
  EXPECT_EQ(run("--help").code, 0);
}

TEST_F(Cli, BenchmarkIsReproducibleAcrossJobs) {
  write("bench.json", R"({
    "configs": [{"alpha": 1.0, "beta": 2.5, "d_z": 10, "d_u": 3}],
    "n_grid": [500, 1000], "repetitions": 3, "seed": 5, "nuisance": {"n_trees": 5}})");
  ASSERT_EQ(run("benchmark --config " + path("bench.json") + " --out " + path("a") + " --jobs 1").code, 0);
  ASSERT_EQ(run("benchmark --config " + path("bench.json") + " --out " + path("b") + " --jobs 2").code, 0);
  for (const char* suffix : {".csv", "_reps.csv", ".json"}) {
    const std::string a = slurp(path(std::string("a") + suffix));
    EXPECT_FALSE(a.empty());
    EXPECT_EQ(a, slurp(path(std::string("b") + suffix))) << suffix;
  }
  const auto j = nlohmann::json::parse(slurp(path("a.json")));
  EXPECT_EQ(j.at("schema"), "nete.benchmark.v1");
}

TEST_F(Cli, BenchmarkAllCellsFailed) {
  write("fail.json", R"({
    "configs": [{"alpha": 1.0, "beta": 2.5, "d_z": 3, "d_u": 2}],
    "n_grid": [200], "repetitions": 2, "seed": 1, "threshold": 1e12, "nuisance": {"n_trees": 2}})");
  EXPECT_EQ(run("benchmark --config " + path("fail.json") + " --out " + path("f")).code, 4);
}

TEST_F(Cli, SemiSyntheticFromEnvironment) {
  const std::string cmd = "NETE_WAVESURGE=" + kData + "/wavesurge.csv " + kCli + " semisyn --seed 2 --out " +
                          path("ss") + " > " + path("ss.txt");
  write("cfg.json", R"({"nuisance": {"n_trees": 5}})");
  ASSERT_EQ(std::system((cmd + " --config " + path("cfg.json")).c_str()), 0);
  const auto j = nlohmann::json::parse(slurp(path("ss.json")));
  ASSERT_EQ(j.at("rows").size(), 4u);
  EXPECT_EQ(j.at("rows")[0].at("alpha1"), 2.0);
}

}  // namespace
