#include <gtest/gtest.h>

#include <cstdlib>
#include <json.hpp>
#include <sstream>

#include "saesim/cli.hpp"
#include "saesim/io.hpp"
#include "support.hpp"

using namespace saesim;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run run(std::vector<std::string> args) {
  args.insert(args.begin(), "saesim");
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

// Small fixture bundle shared by the tests in this file.
class CliTest : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    dir_ = test::scratch_dir("cli");
    const auto r = run({"synthetic", "--out", dir_.string(), "--features", "120", "--dim", "8", "--tokens", "900",
                        "--category", "Emotions", "--cluster-size", "30", "--stoplist-fraction", "0.1", "--layers",
                        "2", "--seed", "3"});
    ASSERT_EQ(r.code, 0) << r.err;
  }

  static std::vector<std::string> inputs(int layer = 0) {
    const auto l = std::to_string(layer);
    return {"--weights-a", (dir_ / ("a_L" + l + ".weights.npy")).string(),
            "--weights-b", (dir_ / ("b_L" + l + ".weights.npy")).string(),
            "--acts-a",    (dir_ / ("a_L" + l + ".acts.npy")).string(),
            "--acts-b",    (dir_ / ("b_L" + l + ".acts.npy")).string(),
            "--tokens",    (dir_ / "tokens.tokens.jsonl").string()};
  }

  static std::vector<std::string> score_args(std::vector<std::string> extra) {
    std::vector<std::string> args = {"score"};
    for (auto& s : inputs()) args.push_back(s);
    for (auto& s : extra) args.push_back(s);
    return args;
  }

  static fs::path dir_;
};

fs::path CliTest::dir_;

}  // namespace

TEST_F(CliTest, ScoreIsByteIdenticalAcrossRunsAndThreads) {
  const auto one = (dir_ / "one.json").string();
  const auto two = (dir_ / "two.json").string();
  ASSERT_EQ(run(score_args({"--metric", "svcca,rsa", "--null-samples", "30", "-o", one})).code, 0);
  ASSERT_EQ(run(score_args({"--metric", "svcca,rsa", "--null-samples", "30", "-o", two, "--threads", "3",
                            "--block-size", "17"}))
                .code,
            0);
  EXPECT_EQ(io::read_file(one), io::read_file(two));
  const auto j = nlohmann::json::parse(io::read_file(one));
  ASSERT_TRUE(j.is_array());
  EXPECT_EQ(j[0]["metric"], "svcca");
  EXPECT_EQ(j[1]["null_samples"], 30);
  EXPECT_EQ(j[0]["config_hash"].get<std::string>().size(), 16u);
}

TEST_F(CliTest, SummaryGoesToStdout) {
  const auto r = run(score_args({"--null-samples", "10"}));
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("svcca  paired="), std::string::npos);
  EXPECT_NE(r.out.find("stages:"), std::string::npos);
  EXPECT_NE(r.out.find("\"metric\": \"svcca\""), std::string::npos);
}

TEST_F(CliTest, ConfigFileWithFlagsWinning) {
  const auto cfg = dir_ / "run.cfg";
  io::write_file(cfg, "# shared settings\nseed = 5\nnull-samples = 12\nmetric = rsa\n");
  const auto out = (dir_ / "cfg.json").string();
  ASSERT_EQ(run(score_args({"--config", cfg.string(), "--seed", "6", "-o", out})).code, 0);
  const auto j = nlohmann::json::parse(io::read_file(out));
  EXPECT_EQ(j["seed"], 6);
  EXPECT_EQ(j["null_samples"], 12);
  EXPECT_EQ(j["metric"], "rsa");
  io::write_file(cfg, "bogus line\n");
  EXPECT_EQ(run(score_args({"--config", cfg.string()})).code, cli::kExitInput);
}

TEST_F(CliTest, ConfigHashIgnoresPathsAndThreads) {
  const auto a = (dir_ / "h1.json").string();
  const auto b = (dir_ / "h2.json").string();
  const auto c = (dir_ / "h3.json").string();
  ASSERT_EQ(run(score_args({"--null-samples", "5", "-o", a})).code, 0);
  ASSERT_EQ(run(score_args({"--null-samples", "5", "-o", b, "--threads", "2"})).code, 0);
  ASSERT_EQ(run(score_args({"--null-samples", "6", "-o", c})).code, 0);
  const auto hash = [](const std::string& p) {
    return nlohmann::json::parse(io::read_file(p))["config_hash"].get<std::string>();
  };
  EXPECT_EQ(hash(a), hash(b));
  EXPECT_NE(hash(a), hash(c));
  EXPECT_EQ(cli::config_hash(""), "cbf29ce484222325");
}

TEST_F(CliTest, SubspaceDefaultsToThousandSamples) {
  const auto out = (dir_ / "sub.json").string();
  std::vector<std::string> args = {"subspace"};
  for (auto& s : inputs()) args.push_back(s);
  args.insert(args.end(), {"--category", "Emotions", "-o", out});
  const auto r = run(args);
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = nlohmann::json::parse(io::read_file(out));
  ASSERT_EQ(j.size(), 2u);
  EXPECT_EQ(j[0]["test"], 1);
  EXPECT_EQ(j[0]["null_samples"], 1000);
  EXPECT_EQ(j[1]["test"], 2);
  EXPECT_EQ(j[1]["null_samples"], 1000);
  EXPECT_EQ(j[0]["filters_applied"], (nlohmann::json{"nonconcept", "one_to_one"}));
}

TEST_F(CliTest, LexiconFromEnvironment) {
  const auto lex = dir_ / "custom.lexicon";
  io::write_file(lex, "Feelings = joy, grief, fear, hope, love, hate\n");
  ::setenv("SAESIM_LEXICON", lex.c_str(), 1);
  std::vector<std::string> args = {"subspace"};
  for (auto& s : inputs()) args.push_back(s);
  for (std::string s : {"--category", "Feelings", "--test1-samples", "10", "--test2-samples", "10"}) {
    args.push_back(s);
  }
  const auto r = run(args);
  args[args.size() - 5] = "Emotions";
  const auto unknown = run(args);
  ::unsetenv("SAESIM_LEXICON");
  EXPECT_NE(r.code, cli::kExitInput) << r.err;
  EXPECT_EQ(unknown.code, cli::kExitInput);
  EXPECT_NE(unknown.err.find("Emotions"), std::string::npos);
}

TEST_F(CliTest, SweepWritesEveryLayerPair) {
  const auto out = (dir_ / "sweep.csv").string();
  const auto svg = (dir_ / "sweep.svg").string();
  const auto r = run({"sweep", "--manifest", (dir_ / "manifest.json").string(), "--null-samples", "10", "-o", out,
                      "--svg", svg, "--metric", "svcca,knn_jaccard"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto csv = io::read_file(out);
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 1 + 2 * 2 * 2);
  EXPECT_EQ(io::read_file(svg).rfind("<svg", 0), 0u);
}

TEST_F(CliTest, ValidateAcceptsBundle) {
  const auto r = run({"validate", (dir_ / "manifest.json").string(), (dir_ / "a_L0.acts.npy").string(),
                      (dir_ / "tokens.tokens.jsonl").string()});
  EXPECT_EQ(r.code, 0) << r.err;
  io::write_file(dir_ / "broken.npy", "\x93NUMPY garbage");
  EXPECT_EQ(run({"validate", (dir_ / "broken.npy").string()}).code, cli::kExitInput);
}

TEST(CliExit, InputAndDegenerateCodes) {
  const auto dir = test::scratch_dir("cli_exit");
  EXPECT_EQ(run({"score", "--weights-a", (dir / "nope.npy").string(), "--weights-b", "x", "--acts-a", "x",
                 "--acts-b", "x", "--tokens", "x"})
                .code,
            cli::kExitInput);
  EXPECT_EQ(run({"frobnicate"}).code, cli::kExitInput);
  EXPECT_EQ(run({"--help"}).code, cli::kExitOk);

  // Two features cannot reach the three pairs every metric needs.
  io::write_file(dir / "w.csv", "1,0\n0,1\n");
  std::string acts;
  for (int t = 0; t < 10; ++t) acts += std::to_string(t % 3) + "," + std::to_string((t * 7) % 5) + "\n";
  io::write_file(dir / "acts.csv", acts);
  std::string tokens;
  for (int t = 0; t < 10; ++t) tokens += "\"w" + std::to_string(t) + "\"\n";
  io::write_file(dir / "t.jsonl", tokens);
  const auto r = run({"score", "--weights-a", (dir / "w.csv").string(), "--weights-b", (dir / "w.csv").string(),
                      "--acts-a", (dir / "acts.csv").string(), "--acts-b", (dir / "acts.csv").string(), "--tokens",
                      (dir / "t.jsonl").string(), "--filters", "none"});
  EXPECT_EQ(r.code, cli::kExitDegenerate) << r.err;
}

TEST(CliConfig, ExpandConfigSplicesAfterSubcommand) {
  const auto dir = test::scratch_dir("cli_cfg");
  io::write_file(dir / "c.cfg", "seed = 9\n\n# note\nmetric = rsa\n");
  const auto args = cli::expand_config({"saesim", "score", "--config", (dir / "c.cfg").string(), "--metric=svcca"});
  EXPECT_NE(std::find(args.begin(), args.end(), "--seed=9"), args.end());
  EXPECT_EQ(std::find(args.begin(), args.end(), "--metric=rsa"), args.end());
  EXPECT_EQ(args[1], "score");
}
