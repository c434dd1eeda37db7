#include "semtrans/cli.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "semtrans/demos.hpp"
#include "semtrans/io.hpp"

namespace semtrans {
namespace {

namespace fs = std::filesystem;

struct Invocation {
  int code = 0;
  std::string out;
  std::string err;
};

Invocation invoke(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = run_command(args, out, err);
  return {code, out.str(), err.str()};
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("semtrans-cli-" +
            std::to_string(::testing::UnitTest::GetInstance()->random_seed()) +
            "-" + ::testing::UnitTest::GetInstance()
                      ->current_test_info()
                      ->name());
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  fs::path path(const std::string& name) const { return dir_ / name; }
  fs::path dir_;
};

TEST_F(CliTest, ValidateAcceptsGoodModel) {
  write_json_file(path("model.json").string(),
                  model_to_json(demos::lightbulbs()));
  const auto result = invoke({"validate", path("model.json").string()});
  EXPECT_EQ(result.code, 0);
  EXPECT_NE(result.out.find("OK"), std::string::npos);
}

TEST_F(CliTest, ValidateNamesUndeclaredReference) {
  Json doc = model_to_json(demos::lightbulbs());
  doc["equations"]["L"] = "or(B1, Ghost, E3)";
  write_json_file(path("model.json").string(), doc);
  const auto result = invoke({"validate", path("model.json").string()});
  EXPECT_EQ(result.code, 2);
  EXPECT_NE(result.err.find("Ghost"), std::string::npos);
}

TEST_F(CliTest, SolveOutputsAssignment) {
  write_json_file(path("model.json").string(),
                  model_to_json(demos::lightbulbs()));
  write_json_file(path("noise.json").string(),
                  Json{{"E1", 1.0}, {"E2", 0.0}, {"E3", 0.0}});
  const auto result = invoke({"solve", "--model", path("model.json").string(),
                              "--noise", path("noise.json").string()});
  ASSERT_EQ(result.code, 0) << result.err;
  const Json solution = Json::parse(result.out);
  EXPECT_DOUBLE_EQ(solution["L"].get<double>(), 1.0);
}

TEST_F(CliTest, SampleWritesDeterministicCsv) {
  write_json_file(path("model.json").string(),
                  model_to_json(demos::lightbulbs()));
  const std::vector<std::string> args = {
      "sample",       "--model", path("model.json").string(),
      "--intervention", R"({"targets": {"B1": 0}})",
      "--n",          "200",     "--seed",
      "99",           "--out",   path("samples.csv").string()};
  ASSERT_EQ(invoke(args).code, 0);
  const std::string first = read_file(path("samples.csv"));
  ASSERT_EQ(invoke(args).code, 0);
  EXPECT_EQ(first, read_file(path("samples.csv")));
  EXPECT_EQ(first.substr(0, 8), "B1,B2,L\n");
  // Clamped column is exactly zero on every row.
  std::istringstream lines(first);
  std::string line;
  std::getline(lines, line);
  while (std::getline(lines, line)) EXPECT_EQ(line.substr(0, 2), "0,");
}

TEST_F(CliTest, SampleRequiresSeed) {
  write_json_file(path("model.json").string(),
                  model_to_json(demos::lightbulbs()));
  const auto result = invoke({"sample", "--model",
                              path("model.json").string(), "--n", "10",
                              "--out", path("s.csv").string()});
  EXPECT_EQ(result.code, 2);
}

TEST_F(CliTest, DemoWrong1ExitsWithNotExact) {
  const auto result =
      invoke({"demo", "wrong1", "--out", path("wrong1").string()});
  EXPECT_EQ(result.code, 1);
  const Json report = load_json_file(path("wrong1/report.json").string());
  EXPECT_FALSE(report["exact"].get<bool>());
  EXPECT_FALSE(report["omega"]["order_preserving"].get<bool>());
  for (const auto& probe : report["probes"])
    EXPECT_TRUE(probe["verdict"]["equal"].get<bool>());
  EXPECT_TRUE(report["omega"]["counterexample"]["i"]["targets"].empty());
  EXPECT_EQ(report["omega"]["counterexample"]["j"]["targets"],
            Json({{"X2", 0.0}}));
}

TEST_F(CliTest, DemoDynamicsEmitsEquilibriumModel) {
  const auto result =
      invoke({"demo", "dynamics", "--out", path("dyn").string()});
  EXPECT_EQ(result.code, 0) << result.err;
  const Sem target =
      model_from_json(load_json_file(path("dyn/target.json").string()));
  const auto structure = analyze_structure(target);
  ASSERT_TRUE(structure.linear.has_value());
  EXPECT_NEAR(structure.linear->coefficients(0, 1), 0.4, 1e-12);
  EXPECT_NEAR(structure.linear->exo_loading(1, 1), 10.0 / 7.0, 1e-12);
}

TEST_F(CliTest, CheckExactRunsOnDemoFiles) {
  ASSERT_EQ(invoke({"demo", "wrong2", "--out", path("w2").string()}).code, 1);
  const auto result = invoke(
      {"check-exact", "--source", path("w2/source.json").string(),
       "--target", path("w2/target.json").string(), "--tau",
       path("w2/tau.json").string(), "--omega",
       path("w2/omega.json").string(), "--seed", "5", "--out",
       path("w2/report2.json").string()});
  EXPECT_EQ(result.code, 1);
  const auto again = invoke(
      {"check-exact", "--source", path("w2/source.json").string(),
       "--target", path("w2/target.json").string(), "--tau",
       path("w2/tau.json").string(), "--omega",
       path("w2/omega.json").string(), "--seed", "5", "--out",
       path("w2/report3.json").string()});
  EXPECT_EQ(again.code, 1);
  EXPECT_EQ(read_file(path("w2/report2.json")),
            read_file(path("w2/report3.json")));
}

TEST_F(CliTest, MarginalizeWritesTripleDirectory) {
  write_json_file(path("model.json").string(), model_to_json(demos::fig3()));
  const auto result = invoke(
      {"marginalize", "--model", path("model.json").string(), "--drop",
       "D1,D2,D3", "--mode", "childless", "--out", path("triple").string()});
  ASSERT_EQ(result.code, 0) << result.err;
  for (const auto* name :
       {"model.json", "tau.json", "omega.json", "report.json"})
    EXPECT_TRUE(fs::exists(path("triple") / name)) << name;
  const Json report = load_json_file((path("triple") / "report.json").string());
  EXPECT_TRUE(report["exact"].get<bool>());
}

TEST_F(CliTest, EquilibrateFromSpecFile) {
  write_json_file(path("dyn.json").string(),
                  dynamics_to_json(demos::dynamics()));
  const auto result =
      invoke({"equilibrate", "--spec", path("dyn.json").string(), "--out",
              path("eq").string()});
  ASSERT_EQ(result.code, 0) << result.err;
  const Json report = load_json_file((path("eq") / "report.json").string());
  EXPECT_TRUE(report["exact"].get<bool>());
}

TEST_F(CliTest, UnknownDemoIsAnError) {
  const auto result = invoke({"demo", "nope"});
  EXPECT_EQ(result.code, 2);
  EXPECT_NE(result.err.find("unknown demo"), std::string::npos);
}

TEST_F(CliTest, MissingFileIsAnError) {
  const auto result = invoke({"validate", path("absent.json").string()});
  EXPECT_EQ(result.code, 2);
}

}  // namespace
}  // namespace semtrans
