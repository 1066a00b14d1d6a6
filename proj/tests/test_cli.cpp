#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "nlwm/cli.hpp"

#ifndef NLW_LAB_PATH
#define NLW_LAB_PATH "nlw_lab"
#endif

using namespace nlwm;
namespace fs = std::filesystem;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result call(std::vector<std::string> args) {
  args.insert(args.begin(), "nlw_lab");
  std::vector<const char*> argv;
  for (auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

int binary(const std::string& args) {
  const std::string cmd = std::string("\"") + NLW_LAB_PATH + "\" " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::string> lines_of(const fs::path& p) {
  std::ifstream in(p);
  std::vector<std::string> v;
  for (std::string l; std::getline(in, l);) v.push_back(l);
  return v;
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir = fs::temp_directory_path() /
          ("nlwm_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir);
    fs::create_directories(dir);
  }
  void TearDown() override { fs::remove_all(dir); }
  fs::path dir;
};

}  // namespace

TEST_F(Cli, BinaryExitCodes) {
  const std::string out = " --out \"" + (dir / "o").string() + "\"";
  EXPECT_EQ(binary("--experiment no_rate_scaling" + out), 0);
  EXPECT_EQ(binary("--experiment morawetz_identity --set weights=abs" + out), 1);
  EXPECT_EQ(binary("--experiment energy_conservation --set dt=0.05" + out), 2);
  EXPECT_EQ(binary("--experiment nope" + out), 2);
  EXPECT_EQ(binary("--bogus"), 2);
  EXPECT_EQ(binary("--config \"" + (dir / "missing.cfg").string() + "\""), 3);
  EXPECT_EQ(binary("--list"), 0);
  EXPECT_EQ(binary("--help"), 0);
}

TEST_F(Cli, ListPrintsRegistry) {
  const Result r = call({"--list"});
  EXPECT_EQ(r.code, kExitPass);
  std::string expected;
  for (const auto& n : experiment_names()) expected += n + "\n";
  EXPECT_EQ(r.out, expected);
}

TEST_F(Cli, UsageErrorsNameTheProblem) {
  Result r = call({"--experiment", "energy_conservation", "--set", "dt=0.05"});
  EXPECT_EQ(r.code, kExitUsage);
  EXPECT_NE(r.err.find("dt:"), std::string::npos) << r.err;
  r = call({"--experiment", "nope"});
  EXPECT_EQ(r.code, kExitUsage);
  EXPECT_NE(r.err.find("convergence_study"), std::string::npos) << r.err;
  r = call({"--set", "dx=1"});
  EXPECT_EQ(r.code, kExitUsage);
  EXPECT_NE(r.err.find("dx"), std::string::npos);
  r = call({"--sweep", "a", "--config", "b"});
  EXPECT_EQ(r.code, kExitUsage);
}

TEST_F(Cli, IoErrors) {
  EXPECT_EQ(call({"--config", (dir / "missing.cfg").string()}).code, kExitIo);
  std::ofstream(dir / "file") << "x";
  const Result r = call({"--experiment", "no_rate_scaling", "--out", (dir / "file" / "sub").string()});
  EXPECT_EQ(r.code, kExitIo);
  EXPECT_EQ(call({"--sweep", (dir / "missing.txt").string()}).code, kExitIo);
}

TEST_F(Cli, ReportAndCsvLayout) {
  const fs::path out = dir / "o";
  const Result r = call({"--experiment", "l2star_decay", "--out", out.string()});
  ASSERT_EQ(r.code, kExitPass) << r.err;
  RunConfig cfg;
  cfg.experiment = "l2star_decay";
  cfg.out_dir = out.string();
  const std::string hash = config_hash(cfg);
  const fs::path json_path = out / ("l2star_decay-" + hash + ".report.json");
  ASSERT_TRUE(fs::exists(json_path));
  const auto j = nlohmann::json::parse(slurp(json_path));
  EXPECT_EQ(j["schema_version"], kReportSchemaVersion);
  EXPECT_EQ(j["name"], "l2star_decay");
  EXPECT_EQ(j["config_hash"], hash);
  EXPECT_TRUE(j["passed"].get<bool>());
  EXPECT_EQ(j["params"].size(), config_keys().size());
  ASSERT_FALSE(j["verdicts"].empty());
  for (const auto& v : j["verdicts"]) {
    for (const char* k : {"label", "pass", "measured", "tolerance", "metric"}) EXPECT_TRUE(v.contains(k));
  }
  std::size_t csvs = 0;
  for (const auto& m : j["metrics"]) {
    const fs::path csv = out / ("l2star_decay-" + hash + "." +
                                sanitize_label(m["label"].get<std::string>()) + ".csv");
    ASSERT_TRUE(fs::exists(csv)) << csv;
    const auto lines = lines_of(csv);
    ASSERT_GE(lines.size(), 2u);
    EXPECT_EQ(lines[0], "# nlw-morawetz l2star_decay " + hash);
    EXPECT_EQ(lines[1], "x,value");
    EXPECT_EQ(lines.size() - 2, m["x"].size());
    ++csvs;
  }
  EXPECT_GT(csvs, 0u);
}

TEST_F(Cli, StrideThinsCsvRows) {
  const Series s{"t", {0, 1, 2, 3, 4}, {5, 6, 7, 8, 9}};
  const std::string text = csv_text(s, "e", "h", 2);
  EXPECT_EQ(text, "# nlw-morawetz e h\nx,value\n0,5\n2,7\n4,9\n");
  EXPECT_EQ(csv_text(Series{"t", {0.1}, {1.0 / 3.0}}, "e", "h"),
            "# nlw-morawetz e h\nx,value\n0.10000000000000001,0.33333333333333331\n");
  EXPECT_EQ(sanitize_label("residual[bracket,lambda=+1]"), "residual_bracket_lambda=+1");
}

TEST_F(Cli, RerunsAreByteIdentical) {
  const fs::path a = dir / "a", b = dir / "b";
  ASSERT_EQ(call({"--experiment", "kenig_merle_dichotomy", "--out", a.string()}).code, kExitPass);
  ASSERT_EQ(call({"--experiment", "kenig_merle_dichotomy", "--out", b.string()}).code, kExitPass);
  std::size_t n = 0;
  for (const auto& e : fs::directory_iterator(a)) {
    if (e.path().extension() != ".csv") continue;
    ++n;
    EXPECT_EQ(slurp(e.path()), slurp(b / e.path().filename())) << e.path().filename();
  }
  EXPECT_GT(n, 0u);
}

TEST_F(Cli, ConfigFileThenOverrides) {
  std::ofstream(dir / "run.cfg") << "experiment = energy_conservation\nt_max = 5\n";
  const Result r = call({"--config", (dir / "run.cfg").string(), "--experiment", "no_rate_scaling",
                         "--set", "t_max=7", "--set", "t_max=8", "--out", (dir / "o").string()});
  ASSERT_EQ(r.code, kExitPass) << r.err;
  RunConfig cfg;
  cfg.experiment = "no_rate_scaling";
  cfg.t_max = 8;
  EXPECT_TRUE(fs::exists(dir / "o" / ("no_rate_scaling-" + config_hash(cfg) + ".report.json")));
}

TEST_F(Cli, SweepRunsEveryConfigAndCombinesExitCodes) {
  fs::create_directories(dir / "cfgs");
  std::ofstream(dir / "cfgs" / "pass.cfg") << "experiment = no_rate_scaling\n";
  std::ofstream(dir / "cfgs" / "fail.cfg") << "experiment = morawetz_identity\nweights = abs\n";
  std::ofstream(dir / "cfgs" / "bad.cfg") << "experiment = energy_conservation\ndt = 1\n";
  std::ofstream(dir / "ok.txt") << "# passing only\ncfgs/pass.cfg\n";
  std::ofstream(dir / "mixed.txt") << "cfgs/pass.cfg\ncfgs/fail.cfg  # red\n\n";
  std::ofstream(dir / "usage.txt") << "cfgs/fail.cfg\ncfgs/bad.cfg\n";
  std::ofstream(dir / "io.txt") << "cfgs/bad.cfg\ncfgs/none.cfg\n";
  const std::string out = (dir / "o").string();
  EXPECT_EQ(call({"--sweep", (dir / "ok.txt").string(), "--out", out}).code, kExitPass);
  const Result mixed = call({"--sweep", (dir / "mixed.txt").string(), "--out", out});
  EXPECT_EQ(mixed.code, kExitFail);
  EXPECT_NE(mixed.out.find("no_rate_scaling: pass"), std::string::npos);
  EXPECT_NE(mixed.out.find("morawetz_identity: FAIL"), std::string::npos);
  EXPECT_EQ(call({"--sweep", (dir / "usage.txt").string(), "--out", out}).code, kExitUsage);
  EXPECT_EQ(call({"--sweep", (dir / "io.txt").string(), "--out", out}).code, kExitIo);
}

TEST(CliHelpers, CombineExitRanksIoOverUsageOverFail) {
  EXPECT_EQ(combine_exit(kExitPass, kExitFail), kExitFail);
  EXPECT_EQ(combine_exit(kExitUsage, kExitFail), kExitUsage);
  EXPECT_EQ(combine_exit(kExitUsage, kExitIo), kExitIo);
  EXPECT_EQ(combine_exit(kExitPass, kExitPass), kExitPass);
}

TEST(CliHelpers, SweepThreadsHonoursEnvironment) {
  setenv("NLW_THREADS", "3", 1);
  EXPECT_EQ(sweep_threads(10), 3u);
  EXPECT_EQ(sweep_threads(2), 2u);
  setenv("NLW_THREADS", "junk", 1);
  EXPECT_GE(sweep_threads(10), 1u);
  unsetenv("NLW_THREADS");
}
