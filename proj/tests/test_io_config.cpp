#include <gtest/gtest.h>

#include <filesystem>

#include "test_util.hpp"
#include "tvp/config.hpp"
#include "tvp/io.hpp"

using namespace tvp;
using namespace tvptest;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("tvpshrink_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

json base_config() {
  return json::parse(R"({"seed": 7, "data": {"simulate": {"T": 50}}, "chain": {"burn": 10, "draws": 20}})");
}

}  // namespace

TEST(Transform, Codes) {
  const auto g = apply_transform({100, 110}, 4);
  ASSERT_EQ(g.size(), 2u);
  EXPECT_TRUE(std::isnan(g[0]));
  EXPECT_NEAR(g[1], 9.531017980432486, 1e-12);
  const std::vector<double> x = {1.5, -2, 4};
  EXPECT_EQ(apply_transform(x, 1), x);
  const auto d = apply_transform(x, 2);
  EXPECT_TRUE(std::isnan(d[0]));
  EXPECT_EQ(d[1], -3.5);
  EXPECT_EQ(d[2], 6.0);
  EXPECT_TRUE(std::isnan(apply_transform(x, 3)[1]));
  EXPECT_THROW(apply_transform(x, 5), UserError);
}

TEST(Csv, LoadDropsLeadingUndefinedRows) {
  const CsvTable tab = parse_csv("date,y,x\n1,100,1\n2,110,2\n3,121,4\n4,125,8\n");
  ColumnMapping map;
  map.y = "y";
  map.x = {"x"};
  map.transform = {{"y", 4}, {"x", 2}};
  const LoadedData ld = load_table(tab, map, "t");
  ASSERT_EQ(ld.data.T(), 3);
  ASSERT_EQ(ld.data.p(), 2);
  EXPECT_NEAR(ld.data.y[0], 100 * std::log(1.1), 1e-12);
  EXPECT_EQ(ld.data.X(0, 0), 1.0);
  EXPECT_EQ(ld.data.X(2, 1), 4.0);
}

TEST(Csv, ErrorsAreUserErrors) {
  EXPECT_THROW(parse_csv("a,b\n1\n"), UserError);
  EXPECT_THROW(parse_csv("a,b\n1,zz\n"), UserError);
  const CsvTable tab = parse_csv("y,x\n1,2\n2,3\n3,-1\n");
  ColumnMapping map;
  map.y = "y";
  map.x = {"nope"};
  EXPECT_THROW(load_table(tab, map, "t"), UserError);
  map.x = {"x"};
  map.transform = {{"x", 3}};  // log of a negative value mid-sample
  EXPECT_THROW(load_table(tab, map, "t"), UserError);
}

TEST(Csv, RoundTripIsExact) {
  const std::vector<double> a = {0.1, 1.0 / 3.0, -2.5e-300, 1e300};
  const std::vector<double> b = {std::nextafter(1.0, 2.0), 0.0, -0.0, 123456789.123456789};
  const CsvTable t = parse_csv(to_csv({"a", "b"}, {a, b}));
  ASSERT_EQ(t.rows(), 4);
  for (int i = 0; i < 4; ++i) {
    EXPECT_EQ(t.cols[t.col_index("a")][i], a[i]);
    EXPECT_EQ(t.cols[t.col_index("b")][i], b[i]);
  }
}

TEST(Simulate, DefaultsAndIncrementVariance) {
  SimulationSpec sim;
  EXPECT_EQ(sim.T, 200);
  const SimulatedTVP s = simulate_tvp(sim);
  ASSERT_EQ(s.beta_path.cols(), 201);
  for (int j = 1; j < 3; ++j)
    for (int t = 1; t <= 200; ++t) EXPECT_EQ(s.beta_path(j, t), s.beta_path(j, 0));
  double ss = 0;
  for (int t = 1; t <= 200; ++t) ss += std::pow(s.beta_path(0, t) - s.beta_path(0, t - 1), 2);
  EXPECT_NEAR(ss / 200, 0.02, 0.01);
  for (int t = 0; t < 200; ++t) EXPECT_EQ(s.data.X(t, 0), 1.0);
  EXPECT_EQ(s.data.labels[0], "intercept");
  SimulationSpec bad = sim;
  bad.theta[1] = -1;
  EXPECT_THROW(simulate_tvp(bad), UserError);
}

TEST(Simulate, VarHasStationaryMoments) {
  const MatrixXd Phi = (MatrixXd(2, 2) << 0.5, 0.0, 0.0, 0.5).finished();
  const MultiTimeSeries d = simulate_var(20000, VectorXd::Ones(2), Phi, MatrixXd::Identity(2, 2), 3);
  EXPECT_NEAR(d.Y.col(0).mean(), 2.0, 0.05);  // c / (1 - 0.5)
  EXPECT_NEAR((d.Y.col(1).array() - d.Y.col(1).mean()).square().mean(), 1 / 0.75, 0.05);
}

TEST(Draws, PersistenceRoundTrip) {
  const SimulatedTVP s = simulate_tvp(SimulationSpec{});
  ModelSpec spec{prior_from_json(json::parse(R"({"theta": {"kind": "triple_gamma"}})")), {}};
  spec.opt.store_paths = true;
  ChainControl ctl;
  ctl.n_burn = 20;
  ctl.n_draws = 15;
  const DrawsStore d = run_chain(s.data, spec, ctl);
  const fs::path dir = scratch("draws");
  write_draws(dir.string(), d);
  const DrawsStore r = read_draws(dir.string());
  EXPECT_EQ(r.names, d.names);
  EXPECT_EQ(r.columns, d.columns);
  ASSERT_EQ(r.paths.size(), d.paths.size());
  for (size_t m = 0; m < d.paths.size(); ++m) EXPECT_EQ(r.paths[m], d.paths[m]);
  EXPECT_EQ(r.seed, d.seed);
  EXPECT_EQ(r.labels, d.labels);
  EXPECT_THROW(read_draws((dir / "missing").string()), UserError);
}

TEST(Summaries, QuantileAndBandWidth) {
  EXPECT_DOUBLE_EQ(quantile({1, 2, 3, 4}, 0.5), 2.5);
  EXPECT_DOUBLE_EQ(quantile({4, 1, 3, 2}, 1.0), 4.0);
  EXPECT_DOUBLE_EQ(quantile({1, 2, 3, 4}, 0.25), 1.75);
  std::vector<StatePath> paths;
  for (int m = 0; m <= 100; ++m) paths.push_back(StatePath::Constant(1, 3, m / 100.0));
  EXPECT_NEAR(mean_band_width(paths, 0), 0.95, 1e-12);
}

TEST(Config, SeedIsRequiredAndUnknownKeysRejected) {
  json j = base_config();
  EXPECT_NO_THROW(config_from_json(j));
  j.erase("seed");
  EXPECT_THROW(config_from_json(j), UserError);
  j = base_config();
  j["chain"]["burnin"] = 3;
  EXPECT_THROW(config_from_json(j), UserError);
  j = base_config();
  j["prior"] = json::parse(R"({"theta": {"kind": "ridge", "tua": 1}})");
  EXPECT_THROW(config_from_json(j), UserError);
  j = base_config();
  j["sampler"] = json::parse(R"({"path": "gibbs"})");
  EXPECT_THROW(config_from_json(j), UserError);
  j = base_config();
  j["model"] = json::parse(R"({"type": "cholesky_sv"})");
  EXPECT_THROW(config_from_json(j), UserError);
}

TEST(Config, HashIsCanonical) {
  const json a = base_config();
  json b = json::parse(R"({"chain": {"draws": 20, "burn": 10}, "data": {"simulate": {"T": 50}}, "seed": 7})");
  EXPECT_EQ(config_hash(config_from_json(a)), config_hash(config_from_json(b)));
  // defaults spelled out hash the same as defaults left implicit
  b["sampler"] = json::parse(R"({"path": "awol"})");
  EXPECT_EQ(config_hash(config_from_json(a)), config_hash(config_from_json(b)));
  b["seed"] = 8;
  EXPECT_NE(config_hash(config_from_json(a)), config_hash(config_from_json(b)));
  EXPECT_EQ(fnv1a_hex(""), "cbf29ce484222325");
  EXPECT_EQ(fnv1a_hex("a"), "af63dc4c8601ec8c");
}

TEST(Config, RelativeCsvPathsResolveAgainstConfigDir) {
  const fs::path dir = scratch("cfg");
  write_text_file((dir / "d.csv").string(), "y,x\n1,2\n2,3\n");
  write_text_file((dir / "c.json").string(),
                  R"({"seed": 1, "data": {"csv": "d.csv", "y": "y", "x": ["x"]}, "prior": {"theta": {"kind": "lasso"}}})");
  const RunConfig c = load_config((dir / "c.json").string());
  EXPECT_EQ(fs::path(c.data.csv), dir / "d.csv");
  EXPECT_EQ(c.seed, 1u);
  EXPECT_THROW(load_config((dir / "absent.json").string()), UserError);
}

TEST(Config, EquationSpecsCoverEveryRow) {
  json j = json::parse(R"({"seed": 3, "data": {"csv": "x.csv", "columns": ["a", "b", "c"]},
                           "model": {"type": "cholesky_sv"},
                           "equation_priors": [{"theta": {"kind": "ridge"}}, {"theta": {"kind": "lasso"}},
                                               {"theta": {"kind": "horseshoe"}}]})");
  const RunConfig c = config_from_json(j);
  const auto specs = equation_specs(c, 3);
  ASSERT_EQ(specs.size(), 3u);
  EXPECT_TRUE(std::holds_alternative<RidgePrior>(specs[0].prior.theta));
  EXPECT_TRUE(std::holds_alternative<TripleGammaPrior>(specs[2].prior.theta));
  EXPECT_THROW(equation_specs(c, 4), UserError);
}
