#include <filesystem>
#include <sstream>

#include <gtest/gtest.h>

#include "fixtures.hpp"
#include "msabs/cli.hpp"
#include "msabs/persistence.hpp"

using namespace msabs;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  int code;
  std::string out, err;
};

Outcome run(std::vector<std::string> args) {
  args.insert(args.begin(), "msabs");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("msabs_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string write(const std::string& name, const nlohmann::json& doc) {
    const auto p = (dir_ / name).string();
    write_text(p, doc.dump(2));
    return p;
  }
  std::string sub(const std::string& name) const { return (dir_ / name).string(); }

  fs::path dir_;
};

std::string scenario_file(const std::string& name) {
  return std::string(MSABS_SCENARIO_DIR) + "/" + name;
}

}  // namespace

TEST_F(Cli, ParamsSucceeds) {
  const auto r = run({"params", "--scenario", scenario_file("consensus_pair.json")});
  EXPECT_EQ(r.code, kExitOk) << r.err;
  EXPECT_NE(r.out.find("dt"), std::string::npos);
}

TEST_F(Cli, CycleViolationIsInfeasible) {
  auto doc = fixtures::consensus_pair_doc();
  doc["edges"][0]["mu"] = 0.5;
  const auto r = run({"params", "--scenario", write("cycle.json", doc)});
  EXPECT_EQ(r.code, kExitInfeasible);
  EXPECT_NE(r.err.find("cycle"), std::string::npos) << r.err;
}

TEST_F(Cli, NegativeControlReportsValidationFailure) {
  const auto r = run({"validate", "--scenario", scenario_file("consensus_pair.json"), "--paths",
                      "5", "--trials", "30", "--d-max-scale", "3", "--out", sub("neg")});
  EXPECT_EQ(r.code, kExitValidation) << r.err;
  EXPECT_TRUE(fs::exists(sub("neg") + "/validation.json"));
}

TEST_F(Cli, ValidateSucceedsOnTheChain) {
  const auto r = run({"validate", "--scenario", scenario_file("chain3.json"), "--paths", "5",
                      "--trials", "10", "--transitions", "4"});
  EXPECT_EQ(r.code, kExitOk) << r.err;
}

TEST_F(Cli, ConfigurationErrors) {
  EXPECT_EQ(run({"params", "--scenario", sub("missing.json")}).code, kExitConfig);
  write_text(sub("broken.json"), "{ not json");
  EXPECT_EQ(run({"params", "--scenario", sub("broken.json")}).code, kExitConfig);
  auto doc = fixtures::chain_doc();
  doc["agents"][0]["v_max"] = -1.0;
  EXPECT_EQ(run({"params", "--scenario", write("neg_v.json", doc)}).code, kExitConfig);
  EXPECT_EQ(run({"params"}).code, kExitConfig);
  EXPECT_EQ(run({"export", "--scenario", scenario_file("chain3.json"), "--format", "xml"}).code,
            kExitConfig);
}

TEST_F(Cli, AbstractWritesEnvelopedArtifacts) {
  const auto r = run({"abstract", "--scenario", scenario_file("single_1d.json"), "--depth", "3",
                      "--out", sub("a")});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  for (const char* f : {"scenario.json", "certificate.json", "decomposition_1.json", "ts_1.json",
                        "layers.json", "layers.bin", "layers.csv", "product.dot", "tube.csv",
                        "manifest.json", "timings.json"})
    EXPECT_TRUE(fs::exists(sub("a") + "/" + f)) << f;
  const auto layers = layers_from_payload(load_document(sub("a") + "/layers.json", "layers"));
  EXPECT_EQ(layers.sizes(), (std::vector<std::size_t>{1, 3, 5, 7}));
}

TEST_F(Cli, RepeatedRunsAreByteIdentical) {
  for (const char* d : {"r1", "r2"}) {
    for (const char* cmd : {"abstract", "plan"}) {
      const auto r = run({cmd, "--scenario", scenario_file("chain3.json"), "--depth", "2",
                          "--out", sub(d)});
      ASSERT_EQ(r.code, kExitOk) << r.err;
    }
  }
  std::size_t compared = 0;
  for (const auto& entry : fs::directory_iterator(sub("r1"))) {
    const auto name = entry.path().filename().string();
    if (name == "timings.json") continue;
    EXPECT_EQ(read_text(entry.path().string()), read_text(sub("r2") + "/" + name)) << name;
    ++compared;
  }
  EXPECT_GE(compared, 12u);
}

TEST_F(Cli, SeedOverrideChangesSampledPaths) {
  ASSERT_EQ(run({"plan", "--scenario", scenario_file("chain3.json"), "--paths", "4", "--out",
                 sub("s1")}).code, kExitOk);
  ASSERT_EQ(run({"plan", "--scenario", scenario_file("chain3.json"), "--paths", "4", "--seed",
                 "12345", "--out", sub("s2")}).code, kExitOk);
  EXPECT_NE(read_text(sub("s1") + "/paths.json"), read_text(sub("s2") + "/paths.json"));
}
