#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "cli.hpp"

namespace pstein::cli {
namespace {

struct Result {
  int code = 0;
  std::string out;
  std::string err;
};

Result invoke(std::vector<std::string> args) {
  std::ostringstream out, err;
  Result r;
  r.code = run(args, out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

std::string data(const std::string& name) {
  return std::string(PSTEIN_TEST_DATA_DIR) + "/" + name;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

TEST(Cli, PartitionsOneOne) {
  const Result r = invoke({"partitions", "1", "1"});
  EXPECT_EQ(r.code, 0);
  EXPECT_EQ(r.out, "count=1\n{1:1, 2:1, 3:1, 4:1}\n");
}

TEST(Cli, PartitionsCountLine) {
  const Result r = invoke({"partitions", "2", "1"});
  ASSERT_EQ(r.code, 0);
  std::istringstream lines(r.out);
  std::string first;
  std::getline(lines, first);
  const std::size_t count = std::stoul(first.substr(6));
  std::size_t listed = 0;
  for (std::string line; std::getline(lines, line);) ++listed;
  EXPECT_EQ(count, listed);
  EXPECT_EQ(invoke({"partitions", "5", "1"}).code, kExitUsage);
}

TEST(Cli, BoundCountKernel) {
  const Result r = invoke({"bound", "--kernel", "count", "--t", "400", "--seed", "7"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = nlohmann::json::parse(r.out);
  EXPECT_EQ(j["dk_bound"]["value"].get<double>(), 0.95);
  EXPECT_EQ(j["dw_bound"]["value"].get<double>(), 0.1);
  EXPECT_EQ(j["m"][0][0]["value"].get<double>(), 400.0);
  EXPECT_EQ(j["var_f"]["stderr"].get<double>(), 0.0);
}

TEST(Cli, BerryEsseenTable) {
  const Result r = invoke({"berry-esseen", "--tmax", "1024"});
  ASSERT_EQ(r.code, 0);
  std::istringstream lines(r.out);
  std::string line;
  std::getline(lines, line);
  EXPECT_EQ(line, "t,dk_exact,bound,holds,tail_bound");
  int rows = 0;
  while (std::getline(lines, line)) {
    ++rows;
    EXPECT_NE(line.find(",true,"), std::string::npos) << line;
  }
  EXPECT_EQ(rows, 11);
}

TEST(Cli, SteinCheckJson) {
  const Result r = invoke({"stein-check"});
  ASSERT_EQ(r.code, 0);
  const auto j = nlohmann::json::parse(r.out);
  EXPECT_TRUE(j["all_pass"].get<bool>());
  EXPECT_EQ(j["points"].get<int>(), 4803);
}

TEST(Cli, SampleIsReproducible) {
  const Result a = invoke({"sample", "--t", "30", "--dim", "2", "--seed", "3"});
  const Result b = invoke({"--seed", "3", "sample", "--dim", "2", "--t", "30"});
  ASSERT_EQ(a.code, 0);
  EXPECT_EQ(a.out, b.out);
  EXPECT_EQ(a.out.substr(0, 6), "x0,x1\n");
}

TEST(Cli, UstatReportsErrorBars) {
  const Result r = invoke({"ustat", "--kernel", "geometric_indicator", "--param",
                           "r=0.1", "--t", "15", "--reps", "400", "--seed", "2",
                           "--bootstrap", "30"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = nlohmann::json::parse(r.out);
  EXPECT_EQ(j["g"].size(), 400u);
  EXPECT_GT(j["dk_emp"]["stderr"].get<double>(), 0.0);
  EXPECT_GT(j["dw_emp"]["value"].get<double>(), 0.0);
  EXPECT_LE(j["dk_emp"]["value"].get<double>(),
            2.0 * std::sqrt(j["dw_emp"]["value"].get<double>()));
}

TEST(Cli, ExperimentIsByteIdentical) {
  const auto dir = std::filesystem::temp_directory_path();
  const auto first = dir / "pstein_cli_first.csv";
  const auto second = dir / "pstein_cli_second.csv";
  const std::string config = data("small_experiment.json");
  ASSERT_EQ(invoke({"experiment", config, "--out", first.string()}).code, 0);
  ASSERT_EQ(invoke({"--out", second.string(), "experiment", config}).code, 0);
  const std::string a = slurp(first);
  EXPECT_EQ(a, slurp(second));
  std::istringstream lines(a);
  std::string header;
  std::getline(lines, header);
  EXPECT_EQ(header,
            "t,var_f,var_f_se,dk_emp,dk_emp_se,dk_bound,dk_bound_se,dw_emp,"
            "dw_emp_se,dw_bound,dw_bound_se,t1,t1_se,t2,t2_se,sup_term,"
            "sup_term_se,m_unreliable");
  int rows = 0;
  for (std::string line; std::getline(lines, line);) {
    ++rows;
    EXPECT_EQ(std::count(line.begin(), line.end(), ','), 17);
  }
  EXPECT_EQ(rows, 2);
  std::filesystem::remove(first);
  std::filesystem::remove(second);
}

TEST(Cli, UsageErrors) {
  EXPECT_EQ(invoke({}).code, kExitUsage);
  EXPECT_EQ(invoke({"frobnicate"}).code, kExitUsage);
  EXPECT_EQ(invoke({"berry-esseen", "--bogus"}).code, kExitUsage);
  const Result no_seed = invoke({"bound", "--kernel", "count", "--t", "4"});
  EXPECT_EQ(no_seed.code, kExitUsage);
  EXPECT_NE(no_seed.err.find("--seed"), std::string::npos);
  const Result bad_kernel =
      invoke({"bound", "--kernel", "nope", "--t", "4", "--seed", "1"});
  EXPECT_EQ(bad_kernel.code, kExitUsage);
  const Result bad_param = invoke({"bound", "--kernel", "geometric_indicator",
                                   "--param", "r", "--seed", "1"});
  EXPECT_EQ(bad_param.code, kExitUsage);
}

TEST(Cli, InvalidConfigNamesTheField) {
  const Result r = invoke({"experiment", data("bad_field.json")});
  EXPECT_EQ(r.code, kExitUsage);
  EXPECT_NE(r.err.find("t_values"), std::string::npos) << r.err;
  const Result missing = invoke({"experiment", data("does_not_exist.json")});
  EXPECT_EQ(missing.code, kExitUsage);
}

TEST(Cli, StrictModeFlagsUnreliableEstimates) {
  // Two Monte Carlo samples per partition cannot give a reliable M_22.
  const Result r = invoke({"bound", "--kernel", "geometric_indicator", "--param",
                           "r=0.05", "--t", "20", "--seed", "1", "--mc-samples",
                           "2", "--strict"});
  EXPECT_EQ(r.code, kExitNumerical);
  const auto j = nlohmann::json::parse(r.out);
  EXPECT_TRUE(j["metadata"]["unreliable_m"].get<bool>());
}

}  // namespace
}  // namespace pstein::cli
