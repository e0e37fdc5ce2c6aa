#include <gtest/gtest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "tvp/io.hpp"

namespace fs = std::filesystem;

namespace {

const std::string kCli = TVP_CLI_PATH;

fs::path workdir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("tvpshrink_cli_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

struct CliResult {
  int code;
  std::string err;
};

CliResult cli(const std::string& args, const fs::path& dir) {
  const fs::path err = dir / "stderr.txt";
  const std::string cmd = "cd '" + dir.string() + "' && '" + kCli + "' " + args + " 2> '" + err.string() + "'";
  const int st = std::system(cmd.c_str());
  std::ifstream f(err);
  std::stringstream ss;
  ss << f.rdbuf();
  return {WEXITSTATUS(st), ss.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

std::map<std::string, std::string> tree(const fs::path& root) {
  std::map<std::string, std::string> m;
  for (const auto& e : fs::recursive_directory_iterator(root))
    if (e.is_regular_file()) m[fs::relative(e.path(), root).string()] = slurp(e.path());
  return m;
}

void write(const fs::path& p, const std::string& s) { std::ofstream(p) << s; }

const char* kConfig = R"({"seed": 3, "data": {"simulate": {"T": 40}},
  "prior": {"theta": {"kind": "spike_slab"}},
  "chain": {"burn": 50, "draws": 50, "chains": 2},
  "evaluation": {"t0": 36, "burn": 30, "draws": 30, "priors": [
    {"name": "ridge", "prior": {"theta": {"kind": "ridge"}}},
    {"name": "ig", "prior": {"theta": {"kind": "inverse_gamma"}}},
    {"name": "tg", "prior": {"theta": {"kind": "triple_gamma"}}},
    {"name": "hs", "prior": {"theta": {"kind": "horseshoe"}}},
    {"name": "dg", "prior": {"theta": {"kind": "double_gamma"}}},
    {"name": "lasso", "prior": {"theta": {"kind": "lasso"}}}]}})";

}  // namespace

TEST(Cli, RerunsAreByteIdentical) {
  const fs::path d = workdir("rerun");
  write(d / "c.json", kConfig);
  for (const char* o : {"a", "b"}) {
    ASSERT_EQ(cli(std::string("simulate --quiet --config c.json --out ") + o, d).code, 0);
    ASSERT_EQ(cli(std::string("fit --quiet --config c.json --out ") + o, d).code, 0);
  }
  // thread count must not change the output either
  ASSERT_EQ(cli("fit --quiet --threads 2 --config c.json --out c", d).code, 0);
  const auto a = tree(d / "a"), b = tree(d / "b"), c = tree(d / "c");
  ASSERT_GE(a.size(), 8u);
  EXPECT_EQ(a, b);
  for (const auto& [k, v] : c) EXPECT_EQ(v, a.at(k)) << k;
  // a different seed changes the draws
  ASSERT_EQ(cli("fit --quiet --seed 4 --config c.json --out e", d).code, 0);
  EXPECT_NE(slurp(d / "e/draws/chain1/draws.bin"), a.at("draws/chain1/draws.bin"));
}

TEST(Cli, ErrorsMapToExitCodes) {
  const fs::path d = workdir("errors");
  CliResult r = cli("fit --config absent.json", d);
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("\"exit_code\":1"), std::string::npos);
  write(d / "bad.json", R"({"seed": 1, "data": {"simulate": {}}, "chian": {}})");
  EXPECT_EQ(cli("fit --config bad.json", d).code, 1);
  write(d / "noseed.json", R"({"data": {"simulate": {}}})");
  EXPECT_EQ(cli("fit --config noseed.json", d).code, 1);
  EXPECT_EQ(cli("frobnicate", d).code, 1);
  EXPECT_EQ(cli("classify --draws nowhere", d).code, 1);
  EXPECT_EQ(cli("--help > /dev/null", d).code, 0);
}

TEST(Cli, ClassificationRowsSumToOne) {
  const fs::path d = workdir("classify");
  write(d / "c.json", kConfig);
  ASSERT_EQ(cli("fit --quiet --config c.json --out o", d).code, 0);
  ASSERT_EQ(cli("classify --quiet --draws o/draws/chain1 --out k", d).code, 0);
  std::istringstream is(slurp(d / "k/classification.csv"));
  std::string line;
  int rows = 0;
  while (std::getline(is, line)) {
    if (line.empty() || line[0] == '#' || line.rfind("label,", 0) == 0) continue;
    std::istringstream ls(line);
    std::string cell;
    std::getline(ls, cell, ',');
    double s = 0;
    while (std::getline(ls, cell, ',')) s += std::stod(cell);
    EXPECT_NEAR(s, 1.0, 1e-12) << line;
    ++rows;
  }
  EXPECT_EQ(rows, 3);
  ASSERT_EQ(cli("summarize --quiet --draws o/draws/chain1 o/draws/chain2 --out s", d).code, 0);
  EXPECT_TRUE(fs::exists(d / "s/summary.json"));
}

TEST(Cli, EvaluateEmitsPrefixConsistentScores) {
  const fs::path d = workdir("evaluate");
  write(d / "c.json", kConfig);
  ASSERT_EQ(cli("evaluate --quiet --config c.json --out o", d).code, 0);
  const tvp::CsvTable t = tvp::parse_csv(slurp(d / "o/scores.csv"));
  ASSERT_EQ(t.rows(), 4);
  int n = 0;
  for (const std::string name : {"ridge", "ig", "tg", "hs", "dg", "lasso"}) {
    const auto& l = t.cols[t.col_index(name + "_lpds")];
    const auto& c = t.cols[t.col_index(name + "_cumulative")];
    double s = 0;
    for (int r = 0; r < 4; ++r) {
      s += l[r];
      EXPECT_NEAR(c[r], s, 1e-12) << name;
    }
    ++n;
  }
  EXPECT_EQ(n, 6);
}

TEST(Cli, PriorProfileIsSymmetricForEqualShapes) {
  const fs::path d = workdir("profile");
  ASSERT_EQ(cli("prior-profile --quiet --a 0.5 --c 0.5 --phi 1 --grid 50 --out p", d).code, 0);
  const std::string text = slurp(d / "p/profile_grid.csv");
  std::istringstream is(text);
  std::string line;
  std::vector<double> v;
  while (std::getline(is, line))
    if (line.rfind("tpb,", 0) == 0) v.push_back(std::stod(line.substr(line.rfind(',') + 1)));
  ASSERT_EQ(v.size(), 50u);
  for (size_t i = 0; i < v.size(); ++i) EXPECT_NEAR(v[i], v[v.size() - 1 - i], 1e-12 * v[i]);
}
