#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct CliResult {
  int code = -1;
  std::string out;
  std::string err;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    dir_ = fs::temp_directory_path() / (std::string("zetalab_cli_") + info->name());
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }

  fs::path write_config(const std::string& name, const json& j) {
    const fs::path p = dir_ / name;
    std::ofstream(p) << j.dump(2);
    return p;
  }

  CliResult run(const std::string& args, const std::string& env = "") {
    const fs::path so = dir_ / "stdout.txt", se = dir_ / "stderr.txt";
    const std::string cmd = "cd '" + dir_.string() + "' && " + env + " '" + ZETALAB_CLI_PATH + "' " + args + " >'" +
                            so.string() + "' 2>'" + se.string() + "'";
    const int status = std::system(cmd.c_str());
    CliResult r;
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.out = slurp(so);
    r.err = slurp(se);
    return r;
  }

  fs::path dir_;
};

const json kSmallGalerkin = {{"run", {{"galerkin_K", 8}, {"K_list", {4, 8}}}}};

std::vector<std::string> lines_of(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream in(s);
  for (std::string line; std::getline(in, line);) out.push_back(line);
  return out;
}

}  // namespace

TEST_F(CliTest, OrbitsCountsAndCacheHit) {
  const CliResult first = run("orbits --n 8 --out o --cache c");
  ASSERT_EQ(first.code, 0) << first.err;
  const auto rows = lines_of(first.out);
  ASSERT_EQ(rows.size(), 8u);
  const char* counts[] = {"1", "5", "16", "45", "121", "320", "841", "2205"};
  for (int n = 1; n <= 8; ++n) {
    EXPECT_NE(rows[n - 1].find("count=" + std::string(counts[n - 1]) + " expected=" + counts[n - 1]),
              std::string::npos);
    EXPECT_NE(rows[n - 1].find("cache=miss"), std::string::npos);
  }
  std::size_t files = 0;
  for (const auto& e : fs::directory_iterator(dir_ / "c")) files += e.path().extension() == ".ndjson";
  EXPECT_EQ(files, 8u);
  EXPECT_TRUE(fs::exists(dir_ / "o" / "orbits_summary.csv"));

  const CliResult second = run("orbits --n 8 --out o --cache c");
  ASSERT_EQ(second.code, 0);
  for (const auto& row : lines_of(second.out)) EXPECT_NE(row.find("cache=hit"), std::string::npos) << row;
}

TEST_F(CliTest, CacheDirectoryFromEnvironment) {
  const CliResult r = run("orbits --n 3 --out o", "ZETALAB_CACHE=envcache");
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(fs::exists(dir_ / "envcache"));
  const CliResult flag = run("orbits --n 3 --out o --cache flagcache", "ZETALAB_CACHE=envcache");
  ASSERT_EQ(flag.code, 0);
  EXPECT_TRUE(fs::exists(dir_ / "flagcache"));
}

TEST_F(CliTest, ChangedMapMissesCache) {
  ASSERT_EQ(run("orbits --n 4 --out o --cache c").code, 0);
  write_config("pert.json", {{"map", {{"matrix", {{2, 1}, {1, 1}}}, {"epsilon", 0.01}}}});
  const CliResult r = run("orbits --config pert.json --n 4 --out o --cache c");
  ASSERT_EQ(r.code, 0) << r.err;
  for (const auto& row : lines_of(r.out)) EXPECT_NE(row.find("cache=miss"), std::string::npos);
}

TEST_F(CliTest, LargePerturbationExitsThree) {
  write_config("big.json", {{"map", {{"matrix", {{2, 1}, {1, 1}}}, {"epsilon", 1.5}}}});
  const CliResult r = run("orbits --config big.json --n 3 --out o --cache c");
  EXPECT_EQ(r.code, 3);
  EXPECT_TRUE(r.err.find("ContinuationFailure") != std::string::npos ||
              r.err.find("CollisionDetected") != std::string::npos)
      << r.err;
}

TEST_F(CliTest, ConfigurationErrorsExitFour) {
  write_config("r3.json", {{"run", {{"r", 3.0}}}});
  const CliResult r3 = run("determinant --config r3.json --out o --cache c");
  EXPECT_EQ(r3.code, 4);
  EXPECT_NE(r3.err.find("AmbiguousRounding"), std::string::npos) << r3.err;

  std::ofstream(dir_ / "broken.json") << "{\"run\": [";
  EXPECT_EQ(run("traces --config broken.json --out o --cache c").code, 4);
  EXPECT_EQ(run("traces --n 17 --out o --cache c").code, 4);
  EXPECT_EQ(run("traces --bogus").code, 4);
  EXPECT_EQ(run("verify --suite nothing").code, 4);
}

TEST_F(CliTest, MissingInputsExitTwo) {
  EXPECT_EQ(run("traces --config absent.json --out o --cache c").code, 2);
  const CliResult r = run("report --out empty --cache c");
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("MissingArtifacts"), std::string::npos) << r.err;
}

TEST_F(CliTest, DeterminantExamples) {
  const CliResult one = run("determinant --out o --cache c");
  ASSERT_EQ(one.code, 0) << one.err;
  const auto series = lines_of(slurp(dir_ / "o" / "series.csv"));
  ASSERT_EQ(series.size(), 14u);
  EXPECT_EQ(series[0], "m,re_c,im_c");
  EXPECT_EQ(series[1], "0,1,0");
  const json res = json::parse(slurp(dir_ / "o" / "resonances.json"));
  int reported = 0;
  for (const auto& z : res["zeros"])
    if (z["reported"].get<bool>()) {
      ++reported;
      EXPECT_NEAR(z["re"].get<double>(), 1.0, 1e-8);
    }
  EXPECT_EQ(reported, 1);

  write_config("w07.json", {{"weight", {{"kind", "constant"}, {"value", 0.7}}}});
  const CliResult seven = run("determinant --config w07.json --out o7 --cache c");
  ASSERT_EQ(seven.code, 0) << seven.err;
  EXPECT_NE(seven.out.find("zero 1.42857"), std::string::npos) << seven.out;
}

TEST_F(CliTest, IdentitiesSuiteSkipsEigensolve) {
  const CliResult r = run("verify --suite identities --out o --cache c");
  ASSERT_EQ(r.code, 0) << r.err;
  const json v = json::parse(r.out);
  EXPECT_TRUE(v["pass"].get<bool>());
  EXPECT_GE(v["checks"].size(), 3u);
  for (const auto& c : v["checks"]) {
    for (const char* key : {"check_name", "lhs", "rhs", "abs_err", "tol", "pass"}) EXPECT_TRUE(c.contains(key)) << key;
  }
  EXPECT_FALSE(fs::exists(dir_ / "o" / "spectrum.csv"));
  EXPECT_FALSE(fs::exists(dir_ / "o" / "galerkin.json"));
  EXPECT_EQ(r.err.find("galerkin"), std::string::npos);
  EXPECT_TRUE(fs::exists(dir_ / "o" / "verify_identities.json"));
}

TEST_F(CliTest, TightToleranceFailsLemmaSuite) {
  write_config("tight.json", {{"run", {{"tolerances", {{"mollifier", 1e-15}, {"extrapolation", 1e-15}}}}}});
  const CliResult r = run("verify --suite lemma2 --config tight.json --out o --cache c");
  EXPECT_EQ(r.code, 3);
  const json v = json::parse(r.out);
  EXPECT_FALSE(v["pass"].get<bool>());
  int failed = 0;
  for (const auto& c : v["checks"])
    if (!c["pass"].get<bool>()) {
      ++failed;
      EXPECT_GT(c["abs_err"].get<double>(), c["tol"].get<double>());
    }
  EXPECT_GE(failed, 1);
}

TEST_F(CliTest, FullCatRunReportsOneMatchedPair) {
  write_config("small.json", kSmallGalerkin);
  for (const char* stage : {"galerkin", "determinant"})
    ASSERT_EQ(run(std::string(stage) + " --config small.json --out o --cache c").code, 0) << stage;
  ASSERT_EQ(run("report --config small.json --out o --cache c --format csv").code, 0);
  ASSERT_EQ(run("report --config small.json --out o --cache c --format json").code, 0);

  const auto csv = lines_of(slurp(dir_ / "o" / "report.csv"));
  const json rep = json::parse(slurp(dir_ / "o" / "report.json"));
  ASSERT_EQ(rep["rows"].size() + 1, csv.size());
  int matched_zero_rows = 0;
  for (const auto& row : rep["rows"]) {
    if (row[0] == "zero") {
      ++matched_zero_rows;
      EXPECT_EQ(row[2].get<double>(), 1.0);
      EXPECT_GE(row[8].get<int>(), 0);
    }
  }
  EXPECT_EQ(matched_zero_rows, 1);

  // identical numeric content: re-render the json rows with the csv number format
  for (std::size_t i = 0; i < rep["rows"].size(); ++i) {
    std::istringstream line(csv[i + 1]);
    std::string cell;
    for (const auto& v : rep["rows"][i]) {
      ASSERT_TRUE(std::getline(line, cell, ','));
      if (v.is_string()) {
        EXPECT_EQ(cell, v.get<std::string>());
      } else {
        EXPECT_EQ(std::stod(cell), v.get<double>()) << csv[i + 1];
      }
    }
  }

  const CliResult verify = run("verify --suite crosscheck --config small.json --out o --cache c");
  EXPECT_EQ(verify.code, 0) << verify.out;
}

TEST_F(CliTest, RepeatedRunsAreByteIdentical) {
  write_config("pert.json", {{"map", {{"matrix", {{2, 1}, {1, 1}}}, {"epsilon", 0.02}}},
                             {"run", {{"galerkin_K", 8}, {"K_list", {6, 8}}, {"n_max", 8}, {"N_list", {6, 7, 8}}}}});
  for (const char* out : {"a", "b"})
    for (const char* stage : {"galerkin", "determinant", "report"})
      ASSERT_EQ(run(std::string(stage) + " --config pert.json --out " + out + " --cache cache_" + out).code, 0)
          << stage;
  std::size_t compared = 0;
  for (const auto& e : fs::directory_iterator(dir_ / "a")) {
    const fs::path other = dir_ / "b" / e.path().filename();
    ASSERT_TRUE(fs::exists(other)) << other;
    EXPECT_EQ(slurp(e.path()), slurp(other)) << e.path().filename();
    ++compared;
  }
  EXPECT_GE(compared, 6u);
}
