#include <gtest/gtest.h>

#include <httplib.h>
#include <json.hpp>
#include <unistd.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "ctxcite/service/cli.hpp"
#include "ctxcite/synthetic.hpp"

namespace ctxcite::service {
namespace {

using nlohmann::json;
namespace fs = std::filesystem;

struct CliRun {
  int code;
  std::string out;
  std::string err;
};

CliRun Cli(const std::vector<std::string>& args,
           std::optional<std::string> timeoutMs = std::nullopt) {
  std::ostringstream out, err;
  const EnvLookup env = [timeoutMs](const std::string& key) -> std::optional<std::string> {
    if (key == "PROVIDER_TIMEOUT_MS") return timeoutMs;
    return std::nullopt;
  };
  const int code = RunCli(args, out, err, env);
  return {code, out.str(), err.str()};
}

std::string ReadFile(const fs::path& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void ExpectJsonNear(const json& a, const json& b, const std::string& where) {
  if (a.is_number() && b.is_number()) {
    EXPECT_NEAR(a.get<double>(), b.get<double>(), 1e-9) << where;
    return;
  }
  ASSERT_EQ(a.type(), b.type()) << where;
  if (a.is_object()) {
    ASSERT_EQ(a.size(), b.size()) << where;
    for (const auto& [key, value] : a.items()) {
      ASSERT_TRUE(b.contains(key)) << where << "/" << key;
      ExpectJsonNear(value, b.at(key), where + "/" + key);
    }
  } else if (a.is_array()) {
    ASSERT_EQ(a.size(), b.size()) << where;
    for (std::size_t i = 0; i < a.size(); ++i) {
      ExpectJsonNear(a[i], b[i], where + "/" + std::to_string(i));
    }
  } else {
    EXPECT_EQ(a, b) << where;
  }
}

TEST(Cli, AttributeMatchesGolden) {
  const auto r = Cli({"attribute", "--provider", "planted:d=10,k=2", "--seed", "7"});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  const json golden =
      json::parse(ReadFile(fs::path(CTXCITE_TEST_DATA) / "attribute_planted_d10.json"));
  ExpectJsonNear(json::parse(r.out), golden, "");
}

TEST(Cli, GoldenSupportAgreesWithPlant) {
  const json golden =
      json::parse(ReadFile(fs::path(CTXCITE_TEST_DATA) / "attribute_planted_d10.json"));
  const auto plant = PlantedLinearOracle::Random(SyntheticSourceTexts(10), 2, 0, 2.0, 5.0);
  for (std::size_t j = 0; j < 10; ++j) {
    const double w = golden.at("weights")[j];
    const double planted = plant.weights()[j];
    EXPECT_EQ(w != 0.0, planted != 0.0) << j;
    if (planted != 0.0) EXPECT_EQ(std::signbit(w), std::signbit(planted)) << j;
  }
}

TEST(Cli, BadInputsExitThree) {
  auto r = Cli({"attribute", "--provider", "planted:d=10,k=2", "--num-ablations", "0"});
  EXPECT_EQ(r.code, kExitBadInput);
  EXPECT_NE(r.err.find("n must be ≥ 1"), std::string::npos) << r.err;

  r = Cli({"attribute", "--provider", "planted:d=10,k=2", "--statement", "0:999"});
  EXPECT_EQ(r.code, kExitBadInput);
  EXPECT_NE(r.err.find("OutOfBounds"), std::string::npos) << r.err;

  r = Cli({"eval", "--provider", "planted:d=10,k=2", "--methods", ""});
  EXPECT_EQ(r.code, kExitBadInput);

  r = Cli({"attribute", "--provider", "martian:d=3"});
  EXPECT_EQ(r.code, kExitBadInput);

  r = Cli({"attribute", "--bogus-flag"});
  EXPECT_EQ(r.code, kExitBadInput);

  r = Cli({"verify", "--provider", "planted:d=10,k=2"});
  EXPECT_EQ(r.code, kExitBadInput);
}

TEST(Cli, UnreachableProviderExitsTwo) {
  int port = 0;
  {
    httplib::Server probe;
    port = probe.bind_to_any_port("127.0.0.1");
  }
  const fs::path ctx =
      fs::temp_directory_path() / ("ctxcite-cli-ctx-" + std::to_string(::getpid()) + ".txt");
  std::ofstream(ctx) << "One fact. Another fact.";
  const auto r = Cli({"attribute", "--provider", "http://127.0.0.1:" + std::to_string(port),
                      "--context", ctx.string()},
                     "500");
  fs::remove(ctx);
  EXPECT_EQ(r.code, kExitProviderFailure) << r.err;
}

TEST(Cli, ContextAndResponseFiles) {
  const fs::path dir =
      fs::temp_directory_path() / ("ctxcite-cli-" + std::to_string(::getpid()));
  fs::create_directories(dir);
  std::ofstream(dir / "ctx.txt") << SyntheticContext(5);
  std::ofstream(dir / "resp.txt") << "Alpha part. Beta part.";
  const auto r = Cli({"attribute", "--provider", "planted:d=5,k=1", "--context",
                      (dir / "ctx.txt").string(), "--response", (dir / "resp.txt").string(),
                      "--statement", "12:22", "--top-k", "2"});
  fs::remove_all(dir);
  ASSERT_EQ(r.code, kExitOk) << r.err;
  const json out = json::parse(r.out);
  EXPECT_EQ(out.at("d"), 5);
  EXPECT_EQ(out.at("statement").at("charStart"), 11);
  EXPECT_EQ(out.at("statement").at("charEnd"), 22);
}

TEST(Cli, EvalIsByteIdenticalAcrossRuns) {
  const std::vector<std::string> args{"eval", "--provider", "interaction:d=12,k=3", "--trials",
                                      "2", "--seed", "4"};
  const auto a = Cli(args);
  const auto b = Cli(args);
  ASSERT_EQ(a.code, kExitOk) << a.err;
  EXPECT_EQ(a.out, b.out);
  EXPECT_FALSE(a.out.empty());
}

TEST(Cli, ContextCiteTopOneDropTracksLeaveOneOut) {
  const auto r = Cli({"eval", "--provider", "planted:d=20,k=3", "--methods", "contextcite,loo",
                      "--k-list", "1", "--trials", "20", "--seed", "1"});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  std::istringstream lines(r.out);
  std::string line;
  double cc = 0, loo = 0;
  int rows = 0;
  while (std::getline(lines, line)) {
    const json j = json::parse(line);
    const double drop = j.at("topKDrops").at("1");
    (j.at("method") == "loo" ? loo : cc) += drop;
    ++rows;
  }
  EXPECT_EQ(rows, 40);
  ASSERT_GT(loo, 0.0);
  EXPECT_GE(cc / loo, 0.95) << cc << " vs " << loo;
}

TEST(Cli, VerifyPruneAndPoisonScanPrintJson) {
  auto r = Cli({"verify", "--provider", "planted:d=6,k=2", "--k", "2"});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  const json v = json::parse(r.out);
  EXPECT_EQ(v.at("usedSourceIndices").size(), 2u);
  EXPECT_TRUE(v.contains("attribution"));
  r = Cli({"prune", "--provider", "qa:d=8,relevant=3,seed=3", "--query",
           "Where was the treaty signed?", "--k", "1"});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  EXPECT_EQ(json::parse(r.out).at("newResponse"), DistractorQaOracle::kTargetAnswer);
  r = Cli({"poison-scan", "--provider", "poison:d=10,index=4,seed=1", "--top-k", "1"});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  EXPECT_EQ(json::parse(r.out).at("flagged")[0].at("index"), 4);
}

}  // namespace
}  // namespace ctxcite::service
