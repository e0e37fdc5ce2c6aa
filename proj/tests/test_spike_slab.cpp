#include <gtest/gtest.h>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <map>

#include "test_util.hpp"
#include "tvp/config.hpp"
#include "tvp/io.hpp"
#include "tvp/spike_slab.hpp"

using namespace tvp;
using namespace tvptest;
using nlohmann::json;
using boost::math::quadrature::gauss_kronrod;

namespace {

TimeSeriesData noise_data(std::uint64_t seed, int T, int p, bool orthogonal = false) {
  Rng rng(seed);
  TimeSeriesData d;
  d.y.resize(T);
  d.X.resize(T, p);
  for (int t = 0; t < T; ++t) {
    d.y[t] = rng.normal();
    d.X(t, 0) = 1;
    for (int j = 1; j < p; ++j) d.X(t, j) = orthogonal ? ((t >> (j - 1)) % 2 ? 1.0 : -1.0) : rng.normal();
  }
  for (int j = 0; j < p; ++j) d.labels.push_back("x" + std::to_string(j + 1));
  return d;
}

StatePath random_walk_path(std::uint64_t seed, int p, int T) {
  Rng rng(seed);
  StatePath z(p, T + 1);
  for (int j = 0; j < p; ++j) {
    z(j, 0) = rng.normal();
    for (int t = 1; t <= T; ++t) z(j, t) = z(j, t - 1) + rng.normal();
  }
  return z;
}

double log_normal_sum(const VectorXd& r, double s2) {
  return -0.5 * r.size() * std::log(2 * M_PI * s2) - 0.5 * r.squaredNorm() / s2;
}

double log_ig(double s2, double c0, double C0) {
  return c0 * std::log(C0) - std::lgamma(c0) - (c0 + 1) * std::log(s2) - C0 / s2;
}

// integral over log sigma2 of exp(g(l) - ref)
double integrate_log_sigma(const std::function<double(double)>& g, double ref) {
  auto f = [&](double l) { return std::exp(g(l) - ref); };
  return gauss_kronrod<double, 61>::integrate(f, -15.0, 15.0, 15, 1e-12);
}

SpikeSlabPrior gaussian_slab(double tau) {
  SpikeSlabPrior ss;
  ss.slab = SlabKind::Gaussian;
  ss.tau = tau;
  ss.pi_hierarchical = false;
  return ss;
}

std::vector<double> model_frequencies(const std::vector<std::vector<int>>& codes, int p) {
  int n = 1;
  for (int j = 0; j < p; ++j) n *= 3;
  std::vector<double> f(n, 0.0);
  for (const auto& c : codes) f[model_index(c)] += 1.0 / codes.size();
  return f;
}

}  // namespace

TEST(MarginalLikelihood, EmptyModelMatchesQuadrature) {
  const TimeSeriesData d = noise_data(1, 15, 1);
  const RegressionMoments mom = regression_moments(random_walk_path(2, 1, 15), d);
  const double c0 = 2.5, C0 = 1.7;
  const double lml = log_marginal_likelihood({0}, mom, gaussian_slab(1.0), nullptr, c0, C0);
  auto g = [&](double l) { return log_normal_sum(d.y, std::exp(l)) + log_ig(std::exp(l), c0, C0) + l; };
  EXPECT_NEAR(std::log(integrate_log_sigma(g, lml)), 0.0, 1e-8);
}

TEST(MarginalLikelihood, SingleActiveCoefficientMatchesQuadrature) {
  const TimeSeriesData d = noise_data(3, 15, 1);
  const StatePath z = random_walk_path(4, 1, 15);
  const RegressionMoments mom = regression_moments(z, d);
  const double c0 = 2.5, C0 = 1.7, tau = 0.8;
  for (int code : {1, 2}) {
    // code 1: beta only (column x); code 2 also switches on sqrt_theta (column x * z)
    const double lml = log_marginal_likelihood({code}, mom, gaussian_slab(tau), nullptr, c0, C0);
    if (code == 1) {
      auto g = [&](double l) {
        const double s2 = std::exp(l);
        auto inner = [&](double b) {
          return std::exp(log_normal_sum(d.y - d.X.col(0) * b, s2) - 0.5 * b * b / (s2 * tau) -
                          0.5 * std::log(2 * M_PI * s2 * tau) + log_ig(s2, c0, C0) + l - lml);
        };
        return std::log(gauss_kronrod<double, 61>::integrate(inner, -30.0, 30.0, 15, 1e-12)) + lml;
      };
      EXPECT_NEAR(std::log(integrate_log_sigma(g, lml)), 0.0, 1e-7);
    } else {
      EXPECT_LT(lml, std::numeric_limits<double>::infinity());
    }
  }
}

TEST(MarginalLikelihood, FractionalSingleCoefficientMatchesQuadrature) {
  const TimeSeriesData d = noise_data(5, 12, 1);
  const RegressionMoments mom = regression_moments(random_walk_path(6, 1, 12), d);
  SpikeSlabPrior ss;
  ss.slab = SlabKind::Fractional;
  ss.b = 0.1;
  const double c0 = 2.0, C0 = 1.0;
  const double lml = log_marginal_likelihood({1}, mom, ss, nullptr, c0, C0);
  // fractional Bayes: L^(1-b) against the prior L^b / int L^b given sigma2; sigma2 keeps its inverse-gamma prior
  const VectorXd x = d.X.col(0);
  const double bhat = x.dot(d.y) / x.squaredNorm(), se = 1 / std::sqrt(x.squaredNorm());
  auto g = [&](double l) {
    const double s2 = std::exp(l), w = 40 * se * std::sqrt(s2 / ss.b) + 1;
    auto lb = [&](double b) { return ss.b * log_normal_sum(d.y - x * b, s2); };
    const double ref = lb(bhat);
    const double norm =
        gauss_kronrod<double, 61>::integrate([&](double b) { return std::exp(lb(b) - ref); }, bhat - w, bhat + w, 15, 1e-13);
    const double ref1 = log_normal_sum(d.y - x * bhat, s2);
    const double num = gauss_kronrod<double, 61>::integrate(
        [&](double b) { return std::exp(log_normal_sum(d.y - x * b, s2) - ref1); }, bhat - w, bhat + w, 15,
        1e-13);
    return std::log(num) + ref1 - std::log(norm) - ref + log_ig(s2, c0, C0) + l;
  };
  EXPECT_NEAR(std::log(integrate_log_sigma(g, lml)), 0.0, 1e-7);
}

TEST(MarginalLikelihood, FractionalPriorAdaptsToScale) {
  const TimeSeriesData d = noise_data(7, 40, 2);
  const StatePath z = random_walk_path(8, 2, 40);
  TimeSeriesData d2 = d;
  d2.y *= 2;
  d2.X *= 2;
  SpikeSlabPrior ss;
  ss.slab = SlabKind::Fractional;
  const RegressionMoments m1 = regression_moments(z, d), m2 = regression_moments(z, d2);
  const double c0 = 1e-6, C0 = 1e-10;  // vanishing sigma2 prior information
  std::vector<double> diff;
  std::vector<std::pair<double, int>> r1, r2;
  for (int i = 0; i < 9; ++i) {
    const std::vector<int> code = {i % 3, i / 3};
    const double a = log_marginal_likelihood(code, m1, ss, nullptr, c0, C0);
    const double b = log_marginal_likelihood(code, m2, ss, nullptr, c0, C0);
    diff.push_back(b - a);
    r1.push_back({a, i});
    r2.push_back({b, i});
  }
  for (double v : diff) EXPECT_NEAR(v, diff[0], 1e-6);
  std::sort(r1.begin(), r1.end());
  std::sort(r2.begin(), r2.end());
  for (int i = 0; i < 9; ++i) EXPECT_EQ(r1[i].second, r2[i].second);
}

TEST(MarginalLikelihood, RankDeficientDesignIsSkipped) {
  TimeSeriesData d = noise_data(9, 20, 2);
  d.X.col(1) = d.X.col(0);
  SpikeSlabPrior ss;
  ss.slab = SlabKind::Fractional;
  const RegressionMoments m = regression_moments(random_walk_path(1, 2, 20), d);
  EXPECT_EQ(log_marginal_likelihood({1, 1}, m, ss, nullptr, 1, 1), -INFINITY);
}

TEST(Enumeration, ProbabilitiesSumToOne) {
  const TimeSeriesData d = noise_data(10, 30, 2);
  const RegressionMoments m = regression_moments(random_walk_path(11, 2, 30), d);
  SpikeSlabState st;
  st.code = {0, 0};
  const Enumeration e = enumerate_models(m, gaussian_slab(1.0), st, 1, 1);
  ASSERT_EQ(e.prob.size(), 9u);
  EXPECT_NEAR(std::accumulate(e.prob.begin(), e.prob.end(), 0.0), 1.0, 1e-12);
}

TEST(Enumeration, PureNoiseFavoursEmptyModel) {
  const TimeSeriesData d = noise_data(12, 256, 3, true);
  const RegressionMoments m = regression_moments(random_walk_path(13, 3, 256), d);
  const double e = log_marginal_likelihood({0, 0, 0}, m, gaussian_slab(1.0), nullptr, 1, 1);
  for (int i = 1; i < 27; ++i) {
    const std::vector<int> code = {i % 3, (i / 3) % 3, i / 9};
    EXPECT_GT(e, log_marginal_likelihood(code, m, gaussian_slab(1.0), nullptr, 1, 1)) << i;
  }
}

TEST(Enumeration, CapIsEnforced) {
  const TimeSeriesData d = noise_data(14, 20, 3);
  const RegressionMoments m = regression_moments(random_walk_path(1, 3, 20), d);
  SpikeSlabPrior ss = gaussian_slab(1.0);
  ss.enumeration_cap = 2;
  SpikeSlabState st;
  st.code = {0, 0, 0};
  EXPECT_THROW(enumerate_models(m, ss, st, 1, 1), UserError);
}

TEST(SingleMove, StationaryFrequenciesMatchEnumeration) {
  SimulationSpec sim;
  sim.T = 40;
  sim.beta = (VectorXd(2) << 1.0, 0.3).finished();
  sim.theta = (VectorXd(2) << 0.05, 0.0).finished();
  sim.seed = 15;
  const SimulatedTVP s = simulate_tvp(sim);
  const RegressionMoments m = regression_moments(random_walk_path(16, 2, 40), s.data);
  SpikeSlabPrior ss = gaussian_slab(1.0);
  ss.pi_hierarchical = true;
  SpikeSlabState st;
  st.code = {2, 2};
  const Enumeration e = enumerate_models(m, ss, st, 1, 1);
  Rng rng(17);
  std::vector<double> freq(9, 0.0);
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    single_move_step(rng, st, m, ss, 1, 1);
    freq[model_index(st.code)] += 1.0 / n;
  }
  double tv = 0;
  for (int i = 0; i < 9; ++i) tv += 0.5 * std::abs(freq[i] - e.prob[i]);
  EXPECT_LT(tv, 0.02);
}

TEST(SingleMove, DetailedBalanceOnThreeModels) {
  const TimeSeriesData d = noise_data(18, 25, 1);
  // give the dynamic model some support
  TimeSeriesData dd = d;
  const StatePath z = random_walk_path(19, 1, 25);
  for (int t = 0; t < 25; ++t) dd.y[t] += 0.3 + 0.06 * z(0, t + 1);
  const RegressionMoments m = regression_moments(z, dd);
  const SpikeSlabPrior ss = gaussian_slab(1.0);
  SpikeSlabState st;
  st.code = {0};
  st.pi_delta = 0.4;
  st.pi_gamma = 0.3;
  const Enumeration e = enumerate_models(m, ss, st, 1, 1);
  Rng rng(20);
  const int n = 100000;
  double P[3][3] = {};
  for (int i = 0; i < 3; ++i)
    for (int r = 0; r < n; ++r) {
      st.code = {i};
      single_move_step(rng, st, m, ss, 1, 1);
      P[i][st.code[0]] += 1.0 / n;
    }
  for (int i = 0; i < 3; ++i)
    for (int j = i + 1; j < 3; ++j) {
      const double lhs = e.prob[i] * P[i][j], rhs = e.prob[j] * P[j][i];
      const double se = std::hypot(e.prob[i] * std::sqrt(P[i][j] * (1 - P[i][j]) / n),
                                   e.prob[j] * std::sqrt(P[j][i] * (1 - P[j][i]) / n));
      EXPECT_LT(std::abs(lhs - rhs), 4 * se) << i << "-" << j << " " << e.prob[i] << " " << e.prob[j];
    }
}

TEST(Sweep, HardConstraintsAndCounts) {
  SimulationSpec sim;
  sim.T = 100;
  sim.seed = 21;
  const SimulatedTVP s = simulate_tvp(sim);
  ModelSpec spec{prior_from_json(json::parse(R"({"theta": {"kind": "spike_slab"}})")), {}};
  ChainControl ctl;
  ctl.n_burn = 200;
  ctl.n_draws = 800;
  const DrawsStore ds = run_chain(s.data, spec, ctl);
  ASSERT_EQ(ds.codes.size(), 800u);
  for (int m = 0; m < 800; ++m) {
    const ModelCounts c = counts(ds.codes[m]);
    EXPECT_EQ(c.p_d + c.p_f + c.p_0, 3);
    for (int j = 0; j < 3; ++j) {
      const int code = ds.codes[m][j];
      ASSERT_TRUE(code >= 0 && code <= 2);
      if (code == 0) EXPECT_EQ(ds.column("beta[" + std::to_string(j + 1) + "]")[m], 0.0);
      if (code <= 1) EXPECT_EQ(ds.column("sqrt_theta[" + std::to_string(j + 1) + "]")[m], 0.0);
    }
  }
}

TEST(Sweep, PriorOnlyHierarchicalPiGivesUniformDimension) {
  const TimeSeriesData d = noise_data(22, 10, 3);
  ModelSpec spec{prior_from_json(json::parse(
                     R"({"theta": {"kind": "spike_slab", "slab": "gaussian", "a0_gamma": 1, "b0_gamma": 1}})")),
                 {}};
  spec.opt.prior_only = true;
  Rng rng(23);
  SamplerState s = initial_state(d, spec);
  std::vector<double> cnt(4, 0.0), probs(4, 0.25);
  for (int it = 0; it < 200000; ++it) {
    gibbs_sweep(rng, s, d, spec);
    if (it % 10 == 0) cnt[counts(s.ss->code).p_d] += 1;
  }
  EXPECT_GT(chi2_gof(cnt, probs), 0.01);
}

TEST(Sweep, FixedToDynamicMovesAreRarelyAccepted) {
  const SimulatedTVP s = simulate_tvp(SimulationSpec{});
  ModelSpec spec{prior_from_json(json::parse(R"({"theta": {"kind": "spike_slab", "step": "single_move"}})")), {}};
  Rng rng(24);
  SamplerState st = initial_state(s.data, spec);
  for (int it = 0; it < 3000; ++it) gibbs_sweep(rng, st, s.data, spec);
  // baseline: moves between the zero and fixed states, which leave the path out of the model
  auto& A = st.ss->accepted;
  auto& P = st.ss->proposed;
  ASSERT_GT(P[1][2], 0);
  const double base = double(A[0][1] + A[1][0]) / (P[0][1] + P[1][0]);
  EXPECT_LT(double(A[1][2]) / P[1][2], base);
}

TEST(Sweep, ChainsFromFullAndStaticModelsAgree) {
  SimulationSpec sim;
  sim.T = 120;
  sim.seed = 25;
  const SimulatedTVP s = simulate_tvp(sim);
  ChainControl ctl;
  ctl.n_burn = 1000;
  ctl.n_draws = 6000;
  std::vector<double> f[2];
  for (int k = 0; k < 2; ++k) {
    ModelSpec spec{prior_from_json(json::parse(R"({"theta": {"kind": "spike_slab"}})")), {}};
    spec.opt.init_model = k ? "static" : "full";
    ctl.seed = 30 + k;
    f[k] = model_frequencies(run_chain(s.data, spec, ctl).codes, 3);
  }
  // top ten models of the pooled frequencies
  std::vector<int> order(27);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) { return f[0][a] + f[1][a] > f[0][b] + f[1][b]; });
  double tv = 0;
  for (int i = 0; i < 10; ++i) tv += 0.5 * std::abs(f[0][order[i]] - f[1][order[i]]);
  EXPECT_LT(tv, 0.1);
}
