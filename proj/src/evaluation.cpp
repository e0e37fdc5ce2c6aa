#include "tvp/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace tvp {

namespace {

double log_mean_exp(const std::vector<double>& v) {
  const double mx = *std::max_element(v.begin(), v.end());
  if (!std::isfinite(mx)) return mx;
  double s = 0;
  for (double x : v) s += std::exp(x - mx);
  return mx + std::log(s / static_cast<double>(v.size()));
}

// Forecast variance at the next time point for draw m of an SV store.
double sv_next_variance(const DrawsStore& d, int m, Rng& rng) {
  const double mu = d.column("sv_mu")[m], phi = d.column("sv_phi")[m], s2 = d.column("sv_sigma2_eta")[m];
  const VectorXd& h = d.h_paths[m];
  return std::exp(mu + phi * (h[h.size() - 1] - mu) + std::sqrt(s2) * rng.normal());
}

}  // namespace

double lpds_one_step(const DrawsStore& draws, const TimeSeriesData& data, std::uint64_t seed) {
  const int M = draws.n_draws(), t = data.T();
  if (M < 1) throw UserError("lpds", "no posterior draws");
  Rng rng(seed);
  const bool sv = !draws.h_paths.empty();
  std::vector<double> lp(M);
  for (int m = 0; m < M; ++m) {
    TVPParams pr = draws.params(m);
    if (sv) {
      if (pr.sigma2.size() != t - 1) throw UserError("lpds", "SV draws do not cover the training window");
      VectorXd s2(t);
      s2.head(t - 1) = pr.sigma2;
      s2[t - 1] = sv_next_variance(draws, m, rng);
      pr.sigma2 = s2;
    }
    const Gaussian1 g = one_step_predictive(pr, data, t, Parametrization::NonCentered);
    lp[m] = log_normal_pdf(data.y[t - 1], g.mean, g.var);
  }
  return log_mean_exp(lp);
}

double lpds_one_step_pure(const DrawsStore& draws, double y_t, std::uint64_t seed) {
  const int M = draws.n_draws();
  if (M < 1) throw UserError("lpds", "no posterior draws");
  Rng rng(seed);
  std::vector<double> lp(M);
  for (int m = 0; m < M; ++m) {
    const double v = draws.h_paths.empty() ? draws.column("sigma2")[m] : sv_next_variance(draws, m, rng);
    lp[m] = log_normal_pdf(y_t, 0.0, v);
  }
  return log_mean_exp(lp);
}

void accumulate(std::vector<PredictiveScore>& s) {
  double c = 0;
  for (auto& r : s) {
    if (!r.missing) c += r.lpds;
    r.cumulative = c;
  }
}

std::vector<PredictiveScore> rolling_lpds(const TimeSeriesData& data, const ModelSpec& spec,
                                          const RollingOptions& opt) {
  data.validate();
  const int T = data.T();
  if (opt.t0 < 2 || opt.t0 >= T) throw UserError("evaluate", "need 2 <= t0 < T");
  const int n = T - opt.t0;
  std::vector<PredictiveScore> out(n);
  parallel_for(n, opt.threads, [&](int i) {
    const int t = opt.t0 + 1 + i;
    PredictiveScore& r = out[i];
    r.t = t;
    try {
      TimeSeriesData train{data.y.head(t - 1), data.X.topRows(t - 1), data.labels};
      TimeSeriesData upto{data.y.head(t), data.X.topRows(t), data.labels};
      ChainControl c = opt.chain;
      c.seed = split_seed(opt.chain.seed, static_cast<std::uint64_t>(t));
      c.checkpoint_path.clear();
      const DrawsStore d = run_chain(train, spec, c);
      r.lpds = lpds_one_step(d, upto, split_seed(c.seed, 0xF0CA57));
      if (!std::isfinite(r.lpds)) throw NumericalError("non-finite predictive score", t);
    } catch (const std::exception& e) {
      r.missing = true;
      r.lpds = std::numeric_limits<double>::quiet_NaN();
      r.error = e.what();
    }
  });
  accumulate(out);
  return out;
}

std::vector<PredictiveScore> multivariate_lpds(const std::vector<std::vector<PredictiveScore>>& per_eq) {
  if (per_eq.empty()) return {};
  const size_t n = per_eq[0].size();
  std::vector<PredictiveScore> tot(n);
  for (size_t k = 0; k < n; ++k) {
    tot[k].t = per_eq[0][k].t;
    double s = 0;
    for (const auto& e : per_eq) {
      if (e.size() != n || e[k].t != tot[k].t) throw Error("internal", "equation score grids are misaligned");
      if (e[k].missing) tot[k].missing = true;
      s += e[k].lpds;
    }
    tot[k].lpds = tot[k].missing ? std::numeric_limits<double>::quiet_NaN() : s;
  }
  accumulate(tot);
  return tot;
}

std::vector<double> cholesky_lpds_one_step(const SystemFit& fit, const MultiTimeSeries& d, std::uint64_t seed) {
  if (fit.kind != "cholesky_sv") throw UserError("lpds", "system is not a Cholesky-SV fit");
  const int q = d.q(), t = d.T();
  std::vector<double> out(q);
  out[0] = lpds_one_step_pure(fit.eq[0], d.Y(t - 1, 0), split_seed(seed, 0));
  for (int i = 1; i < q; ++i)
    out[i] = lpds_one_step(fit.eq[i], cholesky_equation_data(d, i), split_seed(seed, static_cast<std::uint64_t>(i)));
  return out;
}

ClassificationTable classify_from_indicators(const std::vector<std::vector<int>>& codes,
                                             const std::vector<std::string>& labels) {
  if (codes.empty()) throw UserError("classify", "no indicator draws");
  const size_t p = codes[0].size();
  ClassificationTable tab(p);
  std::vector<long> n0(p), n1(p), n2(p);
  for (const auto& c : codes) {
    if (c.size() != p) throw UserError("classify", "indicator draws have inconsistent length");
    for (size_t j = 0; j < p; ++j) (c[j] == 2 ? n2 : c[j] == 1 ? n1 : n0)[j]++;
  }
  const double M = static_cast<double>(codes.size());
  for (size_t j = 0; j < p; ++j) {
    tab[j].label = j < labels.size() ? labels[j] : "x" + std::to_string(j + 1);
    tab[j].p_dynamic = n2[j] / M;
    tab[j].p_fixed = n1[j] / M;
    tab[j].p_zero = 1.0 - tab[j].p_dynamic - tab[j].p_fixed;
  }
  return tab;
}

std::vector<std::vector<int>> threshold_codes(const DrawsStore& d, double threshold) {
  const int p = d.p(), M = d.n_draws();
  if (!d.has("psi_theta[1]"))
    throw UserError("classify", "thresholding needs local scales of a continuous shrinkage prior on theta");
  const bool beta_scales = d.has("psi_beta[1]");
  std::vector<std::vector<int>> codes(M, std::vector<int>(p));
  for (int j = 0; j < p; ++j) {
    const auto& pt = d.column("psi_theta[" + std::to_string(j + 1) + "]");
    const std::vector<double>* pb = beta_scales ? &d.column("psi_beta[" + std::to_string(j + 1) + "]") : nullptr;
    for (int m = 0; m < M; ++m) {
      const bool dyn = 1.0 / (1.0 + pt[m]) < threshold;
      const bool inc = !pb || 1.0 / (1.0 + (*pb)[m]) < threshold;
      codes[m][j] = dyn ? 2 : inc ? 1 : 0;
    }
  }
  return codes;
}

ClassificationTable classify_by_threshold(const DrawsStore& d, double threshold) {
  return classify_from_indicators(threshold_codes(d, threshold), d.labels);
}

EssResult effective_sample_size(const std::vector<double>& x) {
  const int n = static_cast<int>(x.size());
  if (n < 100) throw UserError("ess", "effective sample size needs at least 100 draws");
  double mean = 0;
  for (double v : x) mean += v;
  mean /= n;
  auto acov = [&](int k) {
    double s = 0;
    for (int i = 0; i + k < n; ++i) s += (x[i] - mean) * (x[i + k] - mean);
    return s / n;
  };
  const double g0 = acov(0);
  if (!(g0 > 1e-300 * std::max(1.0, mean * mean))) return {static_cast<double>(n), true};
  double sum = 0, prev = std::numeric_limits<double>::infinity();
  for (int m = 0; 2 * m + 1 < n; ++m) {
    double G = acov(2 * m) + acov(2 * m + 1);
    if (G <= 0) break;
    G = std::min(G, prev);  // monotone
    prev = G;
    sum += G;
  }
  const double tau = std::max((-g0 + 2 * sum) / g0, 1.0 / std::log10(static_cast<double>(n)));
  return {n / tau, false};
}

}  // namespace tvp
