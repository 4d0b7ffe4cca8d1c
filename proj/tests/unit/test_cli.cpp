#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "json.hpp"

namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("pathhedge_cli_test_" + std::to_string(::getpid())) / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

int run(const std::string& args) {
  const std::string command = std::string(CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(command.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string config(const std::string& name) { return std::string(CONFIG_DIR) + "/" + name; }

fs::path write_config(const fs::path& dir, const std::string& text) {
  const fs::path file = dir / "experiment.ini";
  std::ofstream(file) << text;
  return file;
}

std::string read_file(const fs::path& file) {
  std::ifstream in(file, std::ios::binary);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

nlohmann::json manifest(const fs::path& dir) { return nlohmann::json::parse(read_file(dir / "manifest.json")); }

const char* kPriceConfig = R"([model]
flavor = positive
covariance = 0.04
[paths]
spot = 100
horizon = 1
level = 10
[grid]
nodes = 201
time_steps = 100
[scheme]
fixings = 0 1
payoff = (call x1 100)
[price]
reference = 7.9655674554
tolerance = TOLERANCE
)";

std::string price_config(const std::string& tolerance) {
  std::string text = kPriceConfig;
  text.replace(text.find("TOLERANCE"), 9, tolerance);
  return text;
}

}  // namespace

TEST(Cli, SolveExampleSucceedsAndWritesManifest) {
  const auto out = scratch("solve");
  EXPECT_EQ(run("solve --config " + config("solve_quadratic.ini") + " --out " + out.string()), 0);
  const auto m = manifest(out);
  EXPECT_EQ(m["command"], "solve");
  EXPECT_EQ(m["exit_code"], 0);
  EXPECT_TRUE(m["passed"].get<bool>());
  EXPECT_LE(m["checks"][0]["value"].get<double>(), 1e-3);
  EXPECT_TRUE(fs::exists(out / "solution.csv"));
}

TEST(Cli, PriceExampleSucceeds) {
  const auto out = scratch("price");
  EXPECT_EQ(run("price --config " + config("price_bs_call.ini") + " --out " + out.string()), 0);
  const std::string csv = read_file(out / "price.csv");
  EXPECT_EQ(csv.substr(0, csv.find('\n')).substr(0, 3), "S1,");
}

TEST(Cli, FailedCheckExitsOne) {
  const auto out = scratch("fail");
  const auto file = write_config(out, price_config("1e-9"));
  EXPECT_EQ(run("price --config " + file.string() + " --out " + (out / "o").string()), 1);
  const auto m = manifest(out / "o");
  EXPECT_EQ(m["exit_code"], 1);
  EXPECT_FALSE(m["passed"].get<bool>());
}

TEST(Cli, UsageAndParseErrorsExitTwo) {
  const auto out = scratch("parse");
  EXPECT_EQ(run(""), 2);
  EXPECT_EQ(run("frobnicate --config " + config("price_bs_call.ini")), 2);
  EXPECT_EQ(run("price"), 2);
  EXPECT_EQ(run("price --config " + config("price_bs_call.ini") + " --threads 0"), 2);
  const auto bad_number = write_config(out, price_config("tight"));
  EXPECT_EQ(run("price --config " + bad_number.string() + " --out " + (out / "o").string()), 2);
  std::ofstream(out / "broken.ini") << "[model\ncovariance = 0.04\n";
  EXPECT_EQ(run("price --config " + (out / "broken.ini").string() + " --out " + (out / "b").string()), 2);
}

TEST(Cli, ValidationErrorsExitThree) {
  const auto out = scratch("validation");
  std::string text = price_config("0.01");
  text.replace(text.find("covariance = 0.04"), 17, "covariance = -0.04");
  const auto file = write_config(out, text);
  EXPECT_EQ(run("price --config " + file.string() + " --out " + (out / "o").string()), 3);
  EXPECT_EQ(manifest(out / "o")["exit_code"], 3);
}

TEST(Cli, IoErrorsExitFour) {
  const auto out = scratch("io");
  EXPECT_EQ(run("price --config " + (out / "missing.ini").string()), 4);
  std::ofstream(out / "occupied") << "x";
  EXPECT_EQ(run("price --config " + config("price_bs_call.ini") + " --out " + (out / "occupied" / "sub").string()), 4);
}

TEST(Cli, HedgeOutputIsIndependentOfThreadCount) {
  const auto out = scratch("threads");
  const auto file = write_config(out, R"([model]
flavor = positive
covariance = 0.04
[paths]
spot = 100
horizon = 1
level = 10
count = 12
seed = 9
[grid]
nodes = 201
time_steps = 100
[scheme]
fixings = 0 0.5 1
payoff = (call (avg x1 x2) 100)
[hedge]
levels = 8 10
max_median_abs_error = 0.05
)");
  for (int threads : {1, 3}) {
    const auto dir = out / ("t" + std::to_string(threads));
    EXPECT_LE(run("hedge --config " + file.string() + " --threads " + std::to_string(threads) + " --out " + dir.string()),
              1);
  }
  for (const char* name : {"hedge_levels.csv", "hedge_paths.csv"})
    EXPECT_EQ(read_file(out / "t1" / name), read_file(out / "t3" / name)) << name;
}

TEST(Cli, SeedOverrideIsRecorded) {
  const auto out = scratch("seed");
  const auto file = write_config(out, R"([model]
flavor = positive
covariance = 0.04
[paths]
spot = 100
horizon = 1
level = 8
count = 4
seed = 1
[grid]
nodes = 201
time_steps = 100
[scheme]
fixings = 0 1
payoff = (call x1 100)
[hedge]
levels = 8
max_median_abs_error = 1
)");
  EXPECT_EQ(run("hedge --config " + file.string() + " --seed-override 77 --out " + (out / "a").string()), 0);
  EXPECT_EQ(run("hedge --config " + file.string() + " --out " + (out / "b").string()), 0);
  const auto m = manifest(out / "a");
  EXPECT_EQ(m["overrides"]["seed_override"], 77);
  EXPECT_EQ(m["seeds"]["paths"], 77);
  EXPECT_NE(read_file(out / "a" / "hedge_paths.csv"), read_file(out / "b" / "hedge_paths.csv"));
}
